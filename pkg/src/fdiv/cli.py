"""Command-line interface.

Subcommands mirror the library layers: ``estimate`` and ``potentials`` for
two-sample divergence estimation, ``mi`` and ``softmax`` for the paired and
labeled specializations, ``baseline`` for the reference estimators,
``learn`` for the three feature learners (JSON checkpoints, resumable), and
``experiment`` for the synthetic harness.

Reports are printed as JSON on stdout; tabular outputs are CSV.  Samples
are read with ``numpy.loadtxt`` (comma separated, one row per point).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .baselines import (
    kde_plugin,
    pearson_closed_form,
    pearson_report,
    softmax_newton,
    variational_kl,
)
from .divergences import divergence_from_flag
from .exceptions import FdivError
from .features import LinearReduction, feature_map_from_config
from .feature_learning import (
    learn_linear,
    mi_feature_learning,
    mm_linear_step,
    train_neural,
)
from .harness import ExperimentConfig, run_experiment
from .moments import compute_moments
from .mutual_info import (
    SoftmaxModel,
    mi_estimate,
    softmax_fit,
    variational_mi_objective,
)
from .spectral import EstimateReport, estimate, fit_potentials


def _load_csv(path: str) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def _load_labels(path: str) -> np.ndarray:
    return np.loadtxt(path, delimiter=",").astype(int).ravel()


def _load_feature_map(arg: str):
    """Accept a path to a JSON file or an inline JSON object."""
    text = arg
    if not arg.lstrip().startswith("{"):
        text = Path(arg).read_text()
    return feature_map_from_config(json.loads(text))


def _load_json(path: str) -> dict:
    return json.loads(Path(path).read_text())


def _emit(payload: dict, out: str | None = None) -> None:
    text = json.dumps(payload, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _report_like(value: float, divergence: str, lambda_reg: float,
                 n_p: int, n_q: int, route: str, **extra) -> dict:
    """Baseline results reuse the estimate-report JSON shape."""
    summary = {"route": route}
    summary.update(extra)
    return EstimateReport(value, 0.0, value, divergence, None, lambda_reg,
                          summary, n_p, n_q).to_dict()


# --- subcommand handlers -----------------------------------------------------


def _constant_mode(args) -> str:
    return "augmented_unpenalized" if args.constant else "none"


def _cmd_estimate(args) -> int:
    spec = divergence_from_flag(args.divergence)
    fmap = _load_feature_map(args.features)
    x, y = _load_csv(args.p), _load_csv(args.q)
    report = estimate(x, y, fmap, spec, lambda_reg=args.lambda_reg,
                      constant_mode=_constant_mode(args), debias=args.debias)
    _emit(report.to_dict(), args.out)
    return 0


def _cmd_potentials(args) -> int:
    spec = divergence_from_flag(args.divergence)
    fmap = _load_feature_map(args.features)
    x, y = _load_csv(args.p), _load_csv(args.q)
    pts = _load_csv(args.eval)
    pair = fit_potentials(x, y, fmap, spec, lambda_reg=args.lambda_reg,
                          constant_mode=_constant_mode(args))
    v, w = pair(pts)
    header = ",".join([f"x{i + 1}" for i in range(pts.shape[1])] + ["v", "w"])
    body = np.column_stack([pts, v, w])
    lines = [header] + [",".join(repr(float(c)) for c in row) for row in body]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_mi(args) -> int:
    spec = divergence_from_flag(args.divergence)
    map1 = _load_feature_map(args.features1)
    map2 = _load_feature_map(args.features2)
    pairs = _load_csv(args.pairs)
    report = mi_estimate(pairs, map1, map2, spec, lambda_reg=args.lambda_reg,
                         debias=args.debias, d1=args.dim1, d2=args.dim2)
    _emit(report.to_dict(), args.out)
    return 0


def _cmd_softmax_fit(args) -> int:
    spec = divergence_from_flag(args.divergence)
    fmap = _load_feature_map(args.features)
    x = _load_csv(args.x)
    labels = _load_labels(args.labels)
    k = args.k if args.k else int(labels.max())
    model = softmax_fit(x, labels, fmap, k, spec, lambda_reg=args.lambda_reg)
    Path(args.out).write_text(model.to_json() + "\n")
    print(json.dumps({"mi": model.mi, "k": k, "model": args.out}))
    return 0


def _cmd_softmax_score(args) -> int:
    model = SoftmaxModel.from_json(Path(args.model).read_text())
    x = _load_csv(args.x)
    scores = model.score_all(x)
    payload: dict = {"mi": model.mi, "k": model.k}
    if args.labels:
        labels = _load_labels(args.labels)
        payload["objective"] = variational_mi_objective(scores, labels,
                                                        model.priors)
        payload["accuracy"] = float(np.mean(model.predict(x) == labels))
    if args.scores_out:
        header = ",".join(f"score_{j + 1}" for j in range(scores.shape[1]))
        lines = [header] + [",".join(repr(float(c)) for c in row)
                            for row in scores]
        Path(args.scores_out).write_text("\n".join(lines) + "\n")
        payload["scores"] = args.scores_out
    _emit(payload, args.out)
    return 0


def _cmd_baseline(args) -> int:
    kind = args.method
    if kind in ("variational", "variational-square"):
        fmap = _load_feature_map(args.features)
        x, y = _load_csv(args.p), _load_csv(args.q)
        sol = variational_kl(x, y, fmap, lambda_reg=args.lambda_reg,
                             quadratic=(kind == "variational-square"))
        _emit(_report_like(sol.objective, "kl", args.lambda_reg,
                           x.shape[0], y.shape[0], kind,
                           n_iter=sol.n_iter, converged=sol.converged),
              args.out)
    elif kind == "pearson":
        fmap = _load_feature_map(args.features)
        x, y = _load_csv(args.p), _load_csv(args.q)
        sol = pearson_closed_form(x, y, fmap, lambda_reg=args.lambda_reg)
        _emit(pearson_report(sol, x.shape[0], y.shape[0]).to_dict(), args.out)
    elif kind == "kde":
        x, y = _load_csv(args.p), _load_csv(args.q)
        value = kde_plugin(x, y, bandwidth=args.bandwidth)
        _emit(_report_like(value, "kl", 0.0, x.shape[0], y.shape[0], "kde",
                           bandwidth=args.bandwidth), args.out)
    elif kind == "softmax":
        fmap = _load_feature_map(args.features)
        x = _load_csv(args.x)
        labels = _load_labels(args.labels)
        k = args.k if args.k else int(labels.max())
        sol = softmax_newton(x, labels, fmap, k, lambda_reg=args.lambda_reg)
        _emit(_report_like(sol.objective, "kl", args.lambda_reg,
                           x.shape[0], x.shape[0], "newton-softmax",
                           n_iter=sol.n_iter, converged=sol.converged),
              args.out)
    else:  # pragma: no cover - argparse restricts choices
        raise FdivError(f"unknown baseline {kind!r}")
    return 0


# --- learners with JSON checkpoints ------------------------------------------


def _write_checkpoint(path: str, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload) + "\n")


def _learn_linear(cfg: dict, resume: bool, out: str | None) -> int:
    spec = divergence_from_flag(cfg.get("divergence", "kl"))
    fmap = feature_map_from_config(cfg["features"])
    x, y = _load_csv(cfg["p"]), _load_csv(cfg["q"])
    lam = float(cfg.get("lambda", 0.0))
    n_steps = int(cfg.get("steps", 100))
    tol = float(cfg.get("tol", 1e-10))
    ckpt_path = cfg.get("checkpoint")
    every = int(cfg.get("checkpoint_every", 10))

    moments = compute_moments(fmap, x, y, lam)
    if resume and ckpt_path and Path(ckpt_path).exists():
        state = _load_json(ckpt_path)
        gamma = np.asarray(state["gamma"], dtype=float)
        trace = [float(t) for t in state["trace"]]
        done = int(state["step"])
    else:
        rng = np.random.default_rng(int(cfg.get("seed", 0)))
        gamma = rng.standard_normal((moments.dim, int(cfg["r"])))
        trace = []
        done = 0
    value = trace[-1] if trace else None
    for step in range(done, n_steps):
        gamma, value, _ = mm_linear_step(moments, gamma, spec)
        trace.append(value)
        if ckpt_path and (step + 1) % every == 0:
            _write_checkpoint(ckpt_path, {
                "kind": "linear", "step": step + 1, "gamma": gamma.tolist(),
                "trace": trace,
                "moments": {"lambda_reg": lam, "dim": moments.dim}})
        if len(trace) >= 2 and trace[-1] - trace[-2] <= tol * max(1.0, abs(value)):
            break
    if ckpt_path:
        _write_checkpoint(ckpt_path, {
            "kind": "linear", "step": len(trace), "gamma": gamma.tolist(),
            "trace": trace, "moments": {"lambda_reg": lam, "dim": moments.dim}})
    _emit({"kind": "linear", "value": value, "steps": len(trace),
           "trace": trace, "gamma": gamma.tolist()}, out)
    return 0


def _learn_neural(cfg: dict, resume: bool, out: str | None) -> int:
    spec = divergence_from_flag(cfg.get("divergence", "kl"))
    x, y = _load_csv(cfg["p"]), _load_csv(cfg["q"])
    ckpt_path = cfg.get("checkpoint")
    prev = None
    if resume and ckpt_path and Path(ckpt_path).exists():
        prev = _load_json(ckpt_path)["state"]
    kwargs = dict(
        units=int(cfg.get("units", 50)), r=int(cfg.get("r", 4)),
        lambda_reg=float(cfg.get("lambda", 1e-4)),
        weight_decay=cfg.get("weight_decay"),
        step_size=float(cfg.get("step_size", 0.05)),
        epochs=int(cfg.get("epochs", 40)), batch=int(cfg.get("batch", 32)),
        refresh_batches=int(cfg.get("refresh_batches", 8)),
        moment_epochs=int(cfg.get("moment_epochs", 2)),
        seed=int(cfg.get("seed", 0)))
    res = train_neural(x, y, spec, resume=prev, **kwargs)
    if ckpt_path:
        _write_checkpoint(ckpt_path, {"kind": "neural", "state": res.state})
    _emit({"kind": "neural", "value": res.value, "trace": res.trace,
           "epochs": res.state["epoch"]}, out)
    return 0


def _learn_mi(cfg: dict, resume: bool, out: str | None) -> int:
    spec = divergence_from_flag(cfg.get("divergence", "kl"))
    map1 = feature_map_from_config(cfg["features_1"])
    map2 = feature_map_from_config(cfg["features_2"])
    pairs = _load_csv(cfg["pairs"])
    ckpt_path = cfg.get("checkpoint")
    init = None
    trace0: list[float] = []
    if resume and ckpt_path and Path(ckpt_path).exists():
        state = _load_json(ckpt_path)
        init = (np.asarray(state["gamma1"]), np.asarray(state["gamma2"]))
        trace0 = [float(t) for t in state["trace"]]
    res = mi_feature_learning(
        pairs, map1, map2, spec, r1=int(cfg["r1"]), r2=int(cfg["r2"]),
        lambda_reg=float(cfg.get("lambda", 0.0)),
        rounds=int(cfg.get("rounds", 30)), tol=float(cfg.get("tol", 1e-10)),
        seed=int(cfg.get("seed", 0)), d1=cfg.get("dim_1"), d2=cfg.get("dim_2"),
        init=init)
    trace = trace0 + res.trace
    if ckpt_path:
        _write_checkpoint(ckpt_path, {
            "kind": "mi", "gamma1": res.gamma1.tolist(),
            "gamma2": res.gamma2.tolist(), "trace": trace})
    _emit({"kind": "mi", "value": res.value, "trace": trace,
           "gamma1": res.gamma1.tolist(), "gamma2": res.gamma2.tolist()}, out)
    return 0


def _cmd_learn(args) -> int:
    cfg = _load_json(args.config)
    handler = {"linear": _learn_linear, "neural": _learn_neural,
               "mi": _learn_mi}[args.learner]
    return handler(cfg, args.resume, args.out)


def _cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_dict(_load_json(args.config),
                                     profile=args.profile)
    summary = run_experiment(cfg, args.out)
    print(json.dumps(summary, indent=2, default=float))
    return 0 if summary.get("passed", False) else 1


# --- parser ------------------------------------------------------------------


def _add_divergence(p: argparse.ArgumentParser) -> None:
    p.add_argument("--divergence", default="kl",
                   help="kl, rkl, hellinger, pearson, rpearson, lecam, js, "
                        "or alpha:<value>")


def _add_two_sample(p: argparse.ArgumentParser) -> None:
    p.add_argument("--features", required=True,
                   help="feature map config: JSON file path or inline JSON")
    p.add_argument("--p", required=True, help="CSV of samples from p")
    p.add_argument("--q", required=True, help="CSV of samples from q")
    p.add_argument("--lambda", dest="lambda_reg", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdiv",
        description="closed-form spectral f-divergence estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="two-sample divergence estimate")
    _add_divergence(p)
    _add_two_sample(p)
    p.add_argument("--debias", action="store_true")
    p.add_argument("--constant", action="store_true",
                   help="append an unpenalized constant feature")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("potentials", help="fit and evaluate (v, w)")
    _add_divergence(p)
    _add_two_sample(p)
    p.add_argument("--eval", required=True, help="CSV of evaluation points")
    p.add_argument("--constant", action="store_true",
                   help="append an unpenalized constant feature")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_potentials)

    p = sub.add_parser("mi", help="f-information from paired samples")
    _add_divergence(p)
    p.add_argument("--features1", required=True)
    p.add_argument("--features2", required=True)
    p.add_argument("--pairs", required=True, help="CSV of (x1, x2) rows")
    p.add_argument("--dim1", type=int)
    p.add_argument("--dim2", type=int)
    p.add_argument("--lambda", dest="lambda_reg", type=float, default=0.0)
    p.add_argument("--debias", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_mi)

    p = sub.add_parser("softmax", help="discrete-label MI specialization")
    softmax_sub = p.add_subparsers(dest="softmax_command", required=True)
    pf = softmax_sub.add_parser("fit")
    _add_divergence(pf)
    pf.add_argument("--features", required=True)
    pf.add_argument("--x", required=True)
    pf.add_argument("--labels", required=True, help="CSV of labels in 1..k")
    pf.add_argument("--k", type=int, default=0, help="defaults to max label")
    pf.add_argument("--lambda", dest="lambda_reg", type=float, default=0.0)
    pf.add_argument("--out", required=True, help="model JSON path")
    pf.set_defaults(func=_cmd_softmax_fit)
    ps = softmax_sub.add_parser("score")
    ps.add_argument("--model", required=True)
    ps.add_argument("--x", required=True)
    ps.add_argument("--labels")
    ps.add_argument("--scores-out")
    ps.add_argument("--out")
    ps.set_defaults(func=_cmd_softmax_score)

    p = sub.add_parser("baseline", help="reference estimators")
    p.add_argument("method", choices=("variational", "variational-square",
                                      "softmax", "kde", "pearson"))
    p.add_argument("--features")
    p.add_argument("--p")
    p.add_argument("--q")
    p.add_argument("--x")
    p.add_argument("--labels")
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--lambda", dest="lambda_reg", type=float, default=1e-8)
    p.add_argument("--bandwidth", type=float, default=0.1)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("learn", help="feature learning with checkpoints")
    p.add_argument("learner", choices=("linear", "neural", "mi"))
    p.add_argument("--config", required=True, help="JSON config path")
    p.add_argument("--resume", action="store_true",
                   help="continue from the checkpoint in the config")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_learn)

    p = sub.add_parser("experiment", help="synthetic experiment harness")
    p.add_argument("--config", required=True)
    p.add_argument("--profile", choices=("ci", "paper"))
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FdivError as exc:
        print(f"fdiv: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
