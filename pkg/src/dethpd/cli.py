"""Command-line entry point: ``dethpd <command> ...``.

Exit codes: 0 ok, 2 usage, 3 data error, 4 no tau passed the coverage test
(only with ``--strict``).
"""
from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import os
import sys
import tempfile
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bandwidth import BandwidthSearchConfig, default_tau_grid, select_bandwidth_intractable, \
    select_bandwidth_tractable
from .baselines import product_set
from .calibration import build_calibration_dataset, calibrate_at, fit_logistic, parse_col_range
from .hpd import HpdSet, write_membership_csv
from .loss import gamma_hat, loss_estimate
from .samples import DataError, SampleMatrix, estimate_truncation, load_samples, split_train_test, \
    write_samples
from .targets import TARGETS, get_target
from .tree import DetConfig, build_det

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NO_PASS = 0, 2, 3, 4


class NoTauPassed(Exception):
    pass


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    input_hashes: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    started: float = field(default_factory=time.perf_counter, repr=False)

    def stable_dict(self) -> dict:
        return {"command": self.command, "config": self.config, "seed": self.seed,
                "input_hashes": self.input_hashes, "outputs": self.outputs, "version": __version__}

    @property
    def digest(self) -> str:
        blob = json.dumps(self.stable_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def to_dict(self) -> dict:
        return {**self.stable_dict(), "timings": self.timings, "manifest_hash": self.digest}


class Outputs:
    """Stage output files in temporaries and move them into place only on success."""

    def __init__(self):
        self._staged = []

    def _stage(self, path):
        path = os.path.abspath(path)
        fd, tmp = tempfile.mkstemp(prefix=".dethpd-", dir=os.path.dirname(path))
        os.close(fd)
        self._staged.append((tmp, path))
        return tmp

    def text(self, path, text: str):
        with open(self._stage(path), "w", encoding="utf-8") as fh:
            fh.write(text)

    def via(self, path, writer):
        writer(self._stage(path))

    def commit(self):
        for tmp, final in self._staged:
            os.replace(tmp, final)
        self._staged = []

    def discard(self):
        for tmp, _ in self._staged:
            with contextlib.suppress(OSError):
                os.unlink(tmp)
        self._staged = []


def _json_doc(manifest: RunManifest, result: dict) -> str:
    manifest.timings["elapsed_s"] = round(time.perf_counter() - manifest.started, 6)
    return json.dumps({"manifest": manifest.to_dict(), "manifest_hash": manifest.digest, "result": result},
                      indent=1, sort_keys=True) + "\n"


def _tau_grid(text):
    if text is None:
        return tuple(default_tau_grid())
    try:
        grid = tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad tau grid {text!r}") from None
    return grid


def _det_config(args) -> DetConfig:
    return DetConfig(m_g=args.m_g, budget=args.budget, seed=args.seed)


def _truncate(samples: SampleMatrix, args):
    return estimate_truncation(samples, args.truncation, args.p_target)


def _split(samples: SampleMatrix, args):
    n_train = int(round(args.train_frac * samples.n))
    if not 0 < n_train < samples.n:
        raise DataError(f"--train-frac {args.train_frac} leaves an empty train or test set")
    return split_train_test(samples, n_train, seed=args.seed)


def cmd_gen(args, man, out):
    target = get_target(args.target, d=args.d)
    s = target.draw(args.n, seed=args.seed, with_q=not args.no_q)
    man.config.update({"target": target.name, "d": target.d, "n": args.n, "params": target.params})
    out.via(args.out, lambda p: write_samples(p, s))
    out.text(args.out + ".manifest.json", _json_doc(man, {"rows": s.n, "d": s.d}))
    return EXIT_OK


def cmd_fit(args, man, out):
    samples = load_samples(args.samples, q_col=args.q_col)
    rep = _truncate(samples, args)
    tree = build_det(samples, rep.rect, args.tau, _det_config(args))
    man.config.update({"tau": args.tau, "det": tree.config, "truncation": rep.to_dict()})
    out.text(args.out, _json_doc(man, {"tree": tree.to_dict(), "truncation": rep.to_dict()}))
    return EXIT_OK


def cmd_hpd(args, man, out):
    samples = load_samples(args.samples, q_col=args.q_col)
    train, test = _split(samples, args)
    rep = _truncate(train, args)
    p = rep.p_estimate if args.use_p else 1.0
    cfg = BandwidthSearchConfig(tau_grid=args.tau_grid, delta=args.delta, t_alpha=args.t_alpha, p=p,
                                det=_det_config(args))
    tractable = samples.q_values is not None
    algo = "tractable" if tractable else "intractable"
    man.config.update({"algorithm": algo, "alpha": args.alpha, "tau_grid": list(cfg.tau_grid),
                       "delta": args.delta, "t_alpha": args.t_alpha, "p": p, "train_frac": args.train_frac,
                       "det": _det_config(args).snapshot(), "truncation": rep.to_dict(),
                       "coverage_denominator": "N"})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        select = select_bandwidth_tractable if tractable else select_bandwidth_intractable
        trace = select(train, test, rep.rect, args.alpha, cfg)
    chosen = trace.chosen_set
    result = {"algorithm": algo, "set": chosen.to_dict(include_tree=True), "trace": trace.to_dict()}
    if tractable:
        result["loss"] = trace.chosen.loss.to_dict()
    if trace.no_pass:
        print(f"warning: no tau passed the coverage test; using tau={trace.chosen_tau:g}", file=sys.stderr)
    out.text(args.out, _json_doc(man, result))
    if args.trace_csv:
        out.via(args.trace_csv, trace.write_csv)
    if args.membership_csv:
        out.via(args.membership_csv, lambda p: write_membership_csv(p, test.values, chosen.contains(test.values)))
    print(f"{algo}: tau={trace.chosen_tau:g} leaves={chosen.n_cells} "
          f"coverage={trace.chosen.alpha_hat:.4f}")
    if trace.no_pass and args.strict:
        raise NoTauPassed()
    return EXIT_OK


def _load_set(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    res = doc.get("result", doc)
    return HpdSet.from_dict(res.get("set", res)), doc.get("manifest_hash")


def cmd_loss(args, man, out):
    hpd, ref = _load_set(args.set)
    test = load_samples(args.test, q_col=True)
    if args.gamma is not None:
        gamma = args.gamma
    elif args.train is not None:
        gamma = gamma_hat(load_samples(args.train, q_col=True).q_values, args.alpha)
    else:
        raise DataError("loss needs --gamma or --train (q-valued training samples)")
    rep = loss_estimate(hpd, test, gamma, args.alpha)
    man.config.update({"alpha": args.alpha, "gamma": gamma, "set_manifest": ref})
    out.text(args.out, _json_doc(man, rep.to_dict()))
    print(f"fp={rep.fp:.4f} fn={rep.fn:.4f} total={rep.total:.4f}")
    return EXIT_OK


def cmd_baseline(args, man, out):
    samples = load_samples(args.samples, q_col=args.q_col)
    train, test = _split(samples, args)
    ps = product_set(train, test, args.alpha, args.method, args.tol)
    man.config.update({"alpha": args.alpha, "method": args.method, "tol": args.tol,
                       "train_frac": args.train_frac})
    result = {"set": ps.to_dict()}
    if samples.q_values is not None:
        result["loss"] = loss_estimate(ps, test, gamma_hat(train.q_values, args.alpha), args.alpha).to_dict()
    out.text(args.out, _json_doc(man, result))
    print(f"{args.method}: alpha_uni={ps.alpha_uni:.4f} coverage={ps.realized_coverage:.4f}")
    return EXIT_OK


def cmd_calibrate(args, man, out):
    hpd, ref = _load_set(args.set)
    sim = load_samples(args.sim).values
    tc, yc = parse_col_range(args.theta_cols), parse_col_range(args.y_cols)
    if tc.stop > sim.shape[1] or yc.stop > sim.shape[1]:
        raise DataError(f"{args.sim}: column ranges exceed the {sim.shape[1]} columns present")
    thetas, ys = sim[:, tc], sim[:, yc]
    if thetas.shape[1] != hpd.rect.d:
        raise DataError(f"--theta-cols selects {thetas.shape[1]} columns, set has d={hpd.rect.d}")
    y_obs = np.array([float(v) for v in args.y_obs.split(",")])
    if y_obs.shape[0] != ys.shape[1]:
        raise DataError(f"--y-obs has {y_obs.shape[0]} values, --y-cols selects {ys.shape[1]}")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        ds = build_calibration_dataset(hpd, thetas, ys)
        model = fit_logistic(ds, max_iter=args.max_iter, ridge=args.ridge, degree=args.degree)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    c, se = calibrate_at(model, y_obs)
    man.config.update({"degree": args.degree, "ridge": args.ridge, "y_obs": y_obs.tolist(),
                       "set_manifest": ref})
    out.text(args.out, _json_doc(man, {"c_hat": c, "se": se, "model": model.to_dict(),
                                       "class_counts": list(ds.class_counts)}))
    print(f"c_hat={c:.4f} se={se:.4f}")
    return EXIT_OK


def cmd_query(args, man, out):
    hpd, _ = _load_set(args.set)
    pts = load_samples(args.points, q_col=args.q_col)
    if pts.d != hpd.rect.d:
        raise DataError(f"{args.points}: points have d={pts.d}, set has d={hpd.rect.d}")
    inside = hpd.contains(pts.values)
    out.via(args.out, lambda p: write_membership_csv(p, pts.values, inside))
    print(f"inside={int(inside.sum())}/{pts.n} fraction={inside.mean():.4f}")
    return EXIT_OK


def _add_det(p):
    p.add_argument("--m-g", type=int, default=64, help="grid bins per dimension")
    p.add_argument("--budget", type=int, default=4096, help="corner evaluations per discrepancy search")
    p.add_argument("--truncation", choices=["bounding-box", "per-dim-quantile"], default="bounding-box")
    p.add_argument("--p-target", type=float, default=None, help="box mass for per-dim-quantile truncation")


def _add_split(p):
    p.add_argument("--train-frac", type=float, default=0.9)
    p.add_argument("--q-col", action="store_true", help="last CSV column holds unnormalised density values")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dethpd", description="HPD credible sets from Monte Carlo samples")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="sample a synthetic target to CSV")
    p.add_argument("--target", choices=TARGETS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=2, help="dimension (gauss only)")
    p.add_argument("--no-q", action="store_true", help="omit the q column")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("fit", parents=[common], help="build one density tree")
    p.add_argument("--samples", required=True)
    p.add_argument("--q-col", action="store_true")
    p.add_argument("--tau", type=float, required=True)
    _add_det(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("hpd", parents=[common], help="select tau and emit the HPD set")
    p.add_argument("--samples", required=True)
    _add_split(p)
    p.add_argument("--alpha", type=float, default=0.9)
    p.add_argument("--tau-grid", type=_tau_grid, default=None, help="comma-separated decreasing values")
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--t-alpha", type=float, default=1.0, help="test-sample inflation factor for MCMC output")
    p.add_argument("--use-p", action="store_true", help="target alpha / p with p the truncation mass")
    _add_det(p)
    p.add_argument("--strict", action="store_true", help="exit 4 when no tau passes the coverage test")
    p.add_argument("--trace-csv")
    p.add_argument("--membership-csv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_hpd)

    p = sub.add_parser("loss", parents=[common], help="false-positive / false-negative loss of a set")
    p.add_argument("--set", required=True)
    p.add_argument("--test", required=True, help="CSV whose last column is q")
    p.add_argument("--train", help="q-valued CSV used for the threshold")
    p.add_argument("--gamma", type=float)
    p.add_argument("--alpha", type=float, default=0.9)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("baseline", parents=[common], help="product-of-marginals set (bghm or sr)")
    p.add_argument("--samples", required=True)
    _add_split(p)
    p.add_argument("--method", choices=["bghm", "sr"], default="bghm")
    p.add_argument("--alpha", type=float, default=0.9)
    p.add_argument("--tol", type=float, default=0.002)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("calibrate", parents=[common], help="estimate true coverage of a set at y_obs")
    p.add_argument("--set", required=True)
    p.add_argument("--sim", required=True, help="CSV of simulated (theta, y) pairs")
    p.add_argument("--theta-cols", required=True, help="0-based inclusive range a..b")
    p.add_argument("--y-cols", required=True, help="0-based inclusive range c..d")
    p.add_argument("--y-obs", required=True, help="comma-separated observed summaries")
    p.add_argument("--degree", type=int, default=1)
    p.add_argument("--ridge", type=float, default=0.0)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("query", parents=[common], help="membership of points in a set")
    p.add_argument("--set", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--q-col", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_query)
    return ap


def _inputs(args) -> dict:
    names = ("samples", "test", "train", "set", "sim", "points")
    return {k: _sha256_file(getattr(args, k)) for k in names
            if getattr(args, k, None) and os.path.isfile(getattr(args, k))}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if getattr(args, "tau_grid", "absent") is None:
        args.tau_grid = tuple(default_tau_grid())
    out = Outputs()
    try:
        man = RunManifest(args.command, {}, args.seed, _inputs(args))
        man.outputs = sorted(os.path.basename(v) for k, v in vars(args).items()
                             if v and (k == "out" or k.endswith("_csv")))
        if args.command == "gen":
            man.outputs.append(os.path.basename(args.out) + ".manifest.json")
        code = args.func(args, man, out)
        out.commit()
        return code
    except NoTauPassed:
        out.commit()
        return EXIT_NO_PASS
    except (DataError, OSError, json.JSONDecodeError, KeyError) as e:
        out.discard()
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        out.discard()
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except BaseException:
        out.discard()
        raise


if __name__ == "__main__":
    sys.exit(main())
