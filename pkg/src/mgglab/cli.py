"""Command line interface and experiment orchestration.

Usage: mgg <detect|tau|mstat|sausage|percolate|broadcast|coupling|diagnose|bounds>
           --config FILE [--trials N] [--seed S] [--threads K] [--out DIR]
           [--dump-ensemble]

Configs are strict JSON: unknown keys are errors and every violation is
reported, not just the first.  The transmission range r is never
configurable; it is always derived from the dimension.
"""

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .backend import ACTIVE
from .domain import ModelParams, RngPolicy, SimDomain, derive_range
from .coupling import (CouplingSpec, eq7_failure_bound, lemma_psi_check,
                       psi, run_coupling)
from .experiments import (BroadcastTrialSpec, DetectionTrialSpec,
                          PercolationTrialSpec, default_box_side,
                          dense_cell_diagnostic, detection_neglog_curve,
                          escape_diagnostic, estimate_M, run_broadcast,
                          run_detection, run_percolation, run_single_node_tau,
                          sausage_oracle)
from .motion import BROWNIAN, STATIONARY, MotionModel, Trajectory, \
    sample_target_trajectory
from .pointprocess import sample_ppp, sample_ppp_domain
from .stats import (FitUnavailableError, fit_tail, normal_tail_bound,
                    normal_tail_exact, poisson_chernoff, poisson_tail_exact)

KINDS = ("detect", "tau", "mstat", "sausage", "percolate", "broadcast",
         "coupling", "diagnose", "bounds")

_COMMON_KEYS = {"dimension", "lambda", "s", "domain", "seed", "trials"}
_KIND_KEYS = {
    "detect": {"t_max", "target", "L", "gamma", "route", "margin"},
    "tau": {"t_max", "L", "trajectory", "target"},
    "mstat": {"t_max", "L", "trajectory", "target"},
    "sausage": {"t_max", "paths", "probes"},
    "percolate": {"t_max", "proxy", "subcube_side", "obs_every"},
    "broadcast": {"t_max", "n"},
    "coupling": {"K", "K_prime", "ell", "beta", "eps", "delta", "c1", "c2",
                 "pi0_lambda"},
    "diagnose": {"ell", "xi", "t_max", "L", "obs_every"},
    "bounds": set(),
}


class ConfigError(Exception):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass
class ExperimentConfig:
    kind: str
    params: ModelParams
    domain: SimDomain
    seed: int
    trials: int
    extra: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


_DEFAULT_TRIALS = {
    "detect": 1000, "tau": 10000, "mstat": 10000, "sausage": 200,
    "percolate": 1000, "broadcast": 100, "coupling": 100, "diagnose": 200,
    "bounds": 1,
}


def parse_config(text: str, kind: str) -> ExperimentConfig:
    """Validate a JSON config for the given subcommand.

    Collects every violation before failing so a bad config is fixed in
    one pass.
    """
    if kind not in KINDS:
        raise ConfigError([f"unknown experiment kind {kind!r}"])
    violations = []
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"invalid JSON: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a JSON object"])

    allowed = _COMMON_KEYS | _KIND_KEYS[kind]
    for key in raw:
        if key not in allowed:
            violations.append(f"unknown key {key!r}")
    if kind != "bounds":
        for key in ("dimension", "lambda", "s"):
            if key not in raw:
                violations.append(f"missing required key {key!r}")

    d = raw.get("dimension", 2)
    if not isinstance(d, int) or d < 1:
        violations.append(f"dimension must be an integer >= 1, got {d!r}")
        d = 2
    lam = raw.get("lambda", 1.0)
    if not isinstance(lam, (int, float)) or lam < 0:
        violations.append(f"invalid-intensity: lambda must be >= 0, got {lam!r}")
        lam = 1.0
    s = raw.get("s", 1.0)
    if not isinstance(s, (int, float)) or s < 0:
        violations.append(f"s must be >= 0, got {s!r}")
        s = 1.0
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        violations.append(f"seed must be an integer, got {seed!r}")
        seed = 0
    trials = raw.get("trials", _DEFAULT_TRIALS[kind])
    if not isinstance(trials, int) or trials < 0:
        violations.append(f"trials must be a non-negative integer, got {trials!r}")
        trials = 1

    dom_raw = raw.get("domain", {"kind": "box", "side": 100.0})
    domain = None
    if not isinstance(dom_raw, dict):
        violations.append("domain must be an object {kind, side | n}")
    else:
        dkind = dom_raw.get("kind", "box")
        extra_dom = set(dom_raw) - {"kind", "side", "n"}
        if extra_dom:
            violations.append(f"unknown domain keys {sorted(extra_dom)}")
        if dkind not in ("box", "torus"):
            violations.append(f"domain kind must be 'box' or 'torus', got {dkind!r}")
        else:
            if "n" in dom_raw:
                if lam <= 0:
                    violations.append("domain by expected n requires lambda > 0")
                else:
                    side = (dom_raw["n"] / lam) ** (1.0 / d)
                    domain = SimDomain(d=d, kind=dkind, side=side)
            elif "side" in dom_raw:
                side = dom_raw["side"]
                if not isinstance(side, (int, float)) or side <= 0:
                    violations.append(f"domain side must be > 0, got {side!r}")
                else:
                    domain = SimDomain(d=d, kind=dkind, side=float(side))
            else:
                domain = SimDomain(d=d, kind=dkind, side=100.0)

    if violations:
        raise ConfigError(violations)
    params = ModelParams(lam=float(lam), s=float(s), d=d)
    extra = {k: raw[k] for k in raw if k in _KIND_KEYS[kind]}
    return ExperimentConfig(kind, params, domain, seed, trials, extra, raw)


def _target_model(cfg: ExperimentConfig) -> MotionModel:
    name = cfg.extra.get("target", "stationary")
    if name == "stationary":
        return MotionModel(STATIONARY, cfg.params.s)
    if name == "brownian":
        return MotionModel(BROWNIAN, cfg.params.s)
    raise ConfigError([f"target must be 'stationary' or 'brownian', got {name!r}"])


def _trajectory(cfg: ExperimentConfig, policy: RngPolicy, t_max: int) -> Trajectory:
    if "trajectory" in cfg.extra:
        return Trajectory(np.asarray(cfg.extra["trajectory"], dtype=np.float64))
    model = MotionModel(BROWNIAN, cfg.params.s)
    return sample_target_trajectory(model, t_max, np.zeros(cfg.params.d),
                                    policy.stream("trajectory", 0))


def _json_dump(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, default=_jsonable) + "\n",
                    encoding="utf-8")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def run_experiment(cfg: ExperimentConfig, out_dir: Path, threads: int = 1,
                   dump_ensemble: bool = False) -> dict:
    """Dispatch, write artifact files, and return the manifest dict."""
    if cfg.trials < 1 and cfg.kind != "bounds":
        raise ConfigError(["trials must be >= 1"])
    t0 = time.monotonic()
    out_dir.mkdir(parents=True, exist_ok=True)
    policy = RngPolicy(cfg.seed)
    p = cfg.params
    derived = {"r": p.r}
    summary = {"kind": cfg.kind, "dimension": p.d, "lambda": p.lam, "s": p.s,
               "seed": cfg.seed, "trials": cfg.trials, "r": p.r}
    summary.update(cfg.extra)
    curve = None
    fit_payload = None

    if cfg.kind == "detect":
        t_max = int(cfg.extra.get("t_max", 20))
        L = float(cfg.extra.get("L", 0) or default_box_side(p, t_max))
        gamma = float(cfg.extra.get("gamma", 0.0))
        spec = DetectionTrialSpec(p, L, _target_model(cfg), t_max, gamma)
        route = cfg.extra.get("route", "ensemble")
        margin = float(cfg.extra.get("margin", 5.0))
        if route == "identity":
            curve = detection_neglog_curve(spec, cfg.trials, policy,
                                           margin=margin)
        elif route == "ensemble":
            curve = run_detection(spec, cfg.trials, policy, margin=margin,
                                  threads=threads)
        else:
            raise ConfigError([f"route must be 'ensemble' or 'identity', "
                               f"got {route!r}"])
        derived["L"] = L
        transform = "t/logt" if p.d == 2 else "t"
        try:
            fit_payload = fit_tail(curve, transform).to_dict()
        except FitUnavailableError as exc:
            fit_payload = {"error": str(exc)}
        summary["censored"] = curve.censored

    elif cfg.kind == "tau":
        t_max = int(cfg.extra.get("t_max", 20))
        L = float(cfg.extra.get("L", 10.0))
        X = _trajectory(cfg, policy, t_max)
        spec = DetectionTrialSpec(p, L, _target_model(cfg), len(X))
        est = run_single_node_tau(spec, X, cfg.trials, policy)
        derived["L"] = L
        summary.update({
            "p_hat": est.p_hat, "ci_low": est.ci_low, "ci_high": est.ci_high,
            "hits": est.hits, "implied_survival": est.survival,
            "lam_vol": est.lam_vol,
            "trajectory": X.points,
        })

    elif cfg.kind == "mstat":
        t_max = int(cfg.extra.get("t_max", 50))
        L = float(cfg.extra.get("L", 30.0))
        X = _trajectory(cfg, policy, t_max)
        spec = DetectionTrialSpec(p, L, _target_model(cfg), len(X))
        res = estimate_M(spec, X, cfg.trials, policy)
        derived["L"] = L
        summary.update({
            "m_hat": res["m_hat"], "stderr": res["stderr"],
            "per_step": res["per_step"], "cumulative": res["cumulative"],
            "upper_bound_t_over_Ld": t_max / L**p.d,
        })

    elif cfg.kind == "sausage":
        t_max = int(cfg.extra.get("t_max", 10))
        paths = int(cfg.extra.get("paths", cfg.trials))
        probes = int(cfg.extra.get("probes", 10000))
        res = sausage_oracle(t_max, p.s, p.r, p.d, paths, probes, policy)
        summary.update(res)

    elif cfg.kind == "percolate":
        if cfg.domain is None or not cfg.domain.is_torus:
            raise ConfigError(["percolate requires a torus domain"])
        t_max = int(cfg.extra.get("t_max", 50))
        spec = PercolationTrialSpec(
            p, cfg.domain.side, t_max,
            proxy=cfg.extra.get("proxy", "crossing"),
            subcube_side=float(cfg.extra.get("subcube_side", 0.0)),
            obs_every=int(cfg.extra.get("obs_every", 1)))
        curve, det_curve, record = run_percolation(spec, cfg.trials, policy,
                                                   threads=threads)
        (out_dir / "survival_det.csv").write_text(det_curve.to_csv(),
                                                  encoding="utf-8")
        derived["subcube_side"] = spec.subcube_side
        summary["domination_holds"] = record["domination_holds"]
        summary["censored"] = curve.censored
        try:
            fit_payload = fit_tail(curve, "t").to_dict()
        except FitUnavailableError as exc:
            fit_payload = {"error": str(exc)}

    elif cfg.kind == "broadcast":
        if "n" not in cfg.extra:
            raise ConfigError(["broadcast requires 'n' (expected node count)"])
        t_max = int(cfg.extra.get("t_max", 200))
        spec = BroadcastTrialSpec(p, int(cfg.extra["n"]), t_max)
        curve = run_broadcast(spec, cfg.trials, policy, threads=threads)
        derived["side"] = spec.side
        summary["censored"] = curve.censored
        summary["resampled"] = curve.resampled
        half = np.nonzero(curve.estimate <= 0.5)[0]
        summary["median_t_bc"] = int(half[0]) if len(half) else t_max

    elif cfg.kind == "coupling":
        missing = [k for k in ("K", "K_prime", "ell", "beta", "eps")
                   if k not in cfg.extra]
        if missing:
            raise ConfigError([f"coupling requires key {k!r}" for k in missing])
        ell = float(cfg.extra["ell"])
        eps = float(cfg.extra["eps"])
        c1 = float(cfg.extra.get("c1", 16.0))
        delta = int(cfg.extra.get("delta",
                                  math.ceil(c1 * ell**2 / (p.s**2 * eps**2))))
        spec = CouplingSpec(
            K=float(cfg.extra["K"]), K_prime=float(cfg.extra["K_prime"]),
            ell=ell, beta=float(cfg.extra["beta"]), eps=eps, delta=delta,
            s=p.s, d=p.d, c1=c1, c2=float(cfg.extra.get("c2", 8.0)))
        lam0 = float(cfg.extra.get("pi0_lambda", p.lam))
        verdicts = {"ok": 0, "domination-failed": 0, "failed-precondition": 0}
        subset_all = True
        half = spec.K / 2.0
        for run in range(cfg.trials):
            rng = policy.stream("coupling", run)
            pi0 = sample_ppp(lam0, np.full(p.d, -half), np.full(p.d, half),
                             rng, trial=run)
            tr = run_coupling(spec, pi0, rng)
            verdicts[tr.verdict] += 1
            if tr.verdict == "ok" and not tr.subset_ok:
                subset_all = False
        passes, marg, integral = lemma_psi_check(spec)
        derived["delta"] = delta
        summary.update({
            "verdicts": verdicts,
            "failure_rate": verdicts["domination-failed"] / cfg.trials,
            "eq7_bound": eq7_failure_bound(spec),
            "psi": psi(spec.ell, spec.s, spec.delta, spec.d),
            "inner_ball_integral": integral,
            "lemma_psi_pass": bool(passes),
            "lemma_psi_margin": marg,
            "subset_ok_on_successes": subset_all,
            "pi0_lambda": lam0,
        })

    elif cfg.kind == "diagnose":
        ell = float(cfg.extra.get("ell", 1.0))
        xi = float(cfg.extra.get("xi", 0.2))
        L = float(cfg.extra.get("L", cfg.domain.side if cfg.domain else 20.0))
        t_max = int(cfg.extra.get("t_max", 10))
        obs = int(cfg.extra.get("obs_every", 1))
        rng = policy.stream("diagnose", 0)
        ens = sample_ppp(p.lam, np.zeros(p.d), np.full(p.d, L), rng)
        dense = dense_cell_diagnostic(ens, np.zeros(p.d), np.full(p.d, L),
                                      ell, xi, p.lam)
        dense.pop("counts")
        esc = escape_diagnostic(p.s, L, t_max, p.d, obs, cfg.trials, policy)
        summary.update({"dense": dense, "escape": esc})

    elif cfg.kind == "bounds":
        summary["table"] = bounds_table()

    if curve is not None:
        (out_dir / "survival.csv").write_text(curve.to_csv(), encoding="utf-8")
    if fit_payload is not None:
        _json_dump(out_dir / "fit.json", fit_payload)
    _json_dump(out_dir / "summary.json", summary)

    if dump_ensemble:
        rng = policy.stream("dump-ensemble", 0)
        if cfg.domain is not None:
            ens = sample_ppp_domain(p.lam, cfg.domain, rng)
        else:
            side = derived.get("L", 10.0)
            ens = sample_ppp(p.lam, np.full(p.d, -side / 2),
                             np.full(p.d, side / 2), rng)
        (out_dir / "ensemble.csv").write_text(ens.to_csv(), encoding="utf-8")

    manifest = {
        "version": __version__,
        "backend": ACTIVE,
        "kind": cfg.kind,
        "config": cfg.raw,
        "seed": cfg.seed,
        "trials": cfg.trials,
        "threads": threads,
        "derived": derived,
        "rng_scheme": "SeedSequence([seed & 2^64-1, crc32(experiment), index])",
        "wall_clock_s": time.monotonic() - t0,
    }
    _json_dump(out_dir / "manifest.json", manifest)
    return manifest


def bounds_table() -> list:
    """Concentration bounds next to the exact tails they dominate."""
    rows = []
    for lam in (10.0, 100.0, 1000.0):
        for eps in (0.05, 0.2, 0.5):
            for side in ("upper", "lower"):
                rows.append({
                    "family": "poisson", "lambda": lam, "eps": eps,
                    "side": side,
                    "bound": poisson_chernoff(lam, eps, side),
                    "exact": poisson_tail_exact(lam, eps, side),
                })
    for ratio in (0.5, 1.0, 2.0, 4.0):
        rows.append({
            "family": "normal", "x_over_sigma": ratio,
            "bound": normal_tail_bound(1.0, ratio),
            "exact": normal_tail_exact(1.0, ratio),
        })
    return rows


def _print_bounds(rows) -> None:
    print(f"{'family':8} {'params':24} {'bound':>14} {'exact':>14} {'ok':>3}")
    for row in rows:
        if row["family"] == "poisson":
            desc = f"lam={row['lambda']:g} eps={row['eps']:g} {row['side']}"
        else:
            desc = f"x/sigma={row['x_over_sigma']:g}"
        ok = row["exact"] <= row["bound"]
        print(f"{row['family']:8} {desc:24} {row['bound']:14.6e} "
              f"{row['exact']:14.6e} {'y' if ok else 'N'}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mgg", description="Monte Carlo lab for mobile geometric graphs")
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--config", "--spec", dest="config")
    parser.add_argument("--trials", "--runs", dest="trials", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", default=".")
    parser.add_argument("--dump-ensemble", action="store_true")
    args = parser.parse_args(argv)

    try:
        if args.kind == "bounds" and args.config is None:
            text = "{}"
        elif args.config is None:
            print("error: --config is required", file=sys.stderr)
            return 2
        else:
            try:
                text = Path(args.config).read_text(encoding="utf-8")
            except OSError as exc:
                print(f"error reading config {args.config}: {exc}",
                      file=sys.stderr)
                return 2
        cfg = parse_config(text, args.kind)
        if args.trials is not None:
            if args.trials < 1:
                print("error: trials must be >= 1", file=sys.stderr)
                return 2
            cfg.trials = args.trials
        if args.seed is not None:
            cfg.seed = args.seed
        if args.kind == "bounds":
            rows = bounds_table()
            _print_bounds(rows)
            if args.out != ".":
                out = Path(args.out)
                out.mkdir(parents=True, exist_ok=True)
                _json_dump(out / "summary.json", {"table": rows})
            return 0
        manifest = run_experiment(cfg, Path(args.out), threads=args.threads,
                                  dump_ensemble=args.dump_ensemble)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1
    print(f"done: {cfg.kind} trials={cfg.trials} seed={cfg.seed} "
          f"wall={manifest['wall_clock_s']:.2f}s out={args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
