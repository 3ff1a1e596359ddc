"""Command-line front end.

Subcommands: ``point`` (all analyzers at one parameter point, JSON),
``scan`` (correlation-plane or noise-axis grids, CSV), ``thresholds``
(zero contours by bisection, CSV) and ``experiment`` (shot-level sweep,
JSON plus optional shot dump).

Flags carry the symbols used throughout the library (--tau, --omega, --g,
--gp, --mu, --xi for the thermal family; --n, --c, --cp for the additive
one).  ``--mu inf`` routes to the asymptotic analyzers.  A flat key-value
config file can provide defaults; explicit flags win.  Exit codes: 0
success, 2 validation error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import environments as envs
from . import entanglement as ent
from . import experiment as expmt
from . import protocols as prot
from .gaussian import NumericDegeneracyError, ValidationError

BISECTION_TOL = 1e-6

SCAN_PROTOCOLS = (
    "swap",
    "teleport",
    "distill",
    "qkd",
    "qkd-asymptotic",
    "quad-entanglement",
    "bipartite",
    "tripartite",
)

_METRIC_COLUMNS = {
    "swap": ["epsilon", "log_neg", "swap_ok"],
    "teleport": ["fidelity", "tele_quantum"],
    "distill": ["coherent_info", "distill_ok"],
    "qkd": ["key_rate", "qkd_ok"],
    "qkd-asymptotic": ["epsilon_opt", "rate_opt", "rate_lb", "qkd_ok"],
    "quad-entanglement": ["env_mutual_info", "sigma_prime", "sigma_double_prime", "region"],
    "bipartite": ["logneg_aAp", "logneg_aBp", "logneg_ab", "logneg_ApBp"],
    "tripartite": ["tri_class", "tri_certified"],
}


def _fmt(value) -> str:
    """Locale-independent text with 12 significant digits."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    x = float(value)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.12g}")
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    return value


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValidationError(f"not a number: {text!r}") from None


def _parse_axis(text: str, name: str) -> np.ndarray:
    """Parse 'lo:hi:step' into an inclusive grid, or a single value."""
    parts = text.split(":")
    if len(parts) == 1:
        return np.array([_parse_float(parts[0])])
    if len(parts) != 3:
        raise ValidationError(f"axis {name} must be 'lo:hi:step' or a single value")
    lo, hi, step = (_parse_float(p) for p in parts)
    if step <= 0 or hi <= lo:
        raise ValidationError(f"axis {name} needs hi > lo and step > 0")
    count = int(round((hi - lo) / step)) + 1
    return np.linspace(lo, hi, count)


def _load_config(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, _, val = line.partition("=")
            else:
                key, _, val = line.partition(" ")
            key, val = key.strip(), val.strip()
            if not key or not val:
                raise ValidationError(f"{path}:{lineno}: expected 'key value' or 'key=value'")
            values[key.replace("-", "_")] = val
    return values


def _resolve(args: argparse.Namespace, key: str, default=None):
    """Precedence: explicit flag > config file > default."""
    val = getattr(args, key, None)
    if val is not None:
        return val
    if getattr(args, "_config", None) and key in args._config:
        return args._config[key]
    return default


def _build_env(args):
    """Environment from flags; thermal wins when both families are given."""
    tau = _resolve(args, "tau")
    if tau is not None:
        omega = _resolve(args, "omega")
        if omega is None:
            raise ValidationError("thermal environment needs both --tau and --omega")
        return envs.ThermalEnvironment(
            float(tau),
            float(omega),
            float(_resolve(args, "g", 0.0)),
            float(_resolve(args, "gp", 0.0)),
        )
    n = _resolve(args, "n")
    if n is None:
        raise ValidationError("specify either --tau/--omega/--g/--gp or --n/--c/--cp")
    return envs.AdditiveEnvironment(
        float(n), float(_resolve(args, "c", 0.0)), float(_resolve(args, "cp", 0.0))
    )


def _mu_value(args) -> float:
    mu = _resolve(args, "mu")
    if mu is None:
        raise ValidationError("--mu is required")
    if isinstance(mu, str) and mu.strip().lower() in ("inf", "infinity"):
        return math.inf
    return float(mu)


def _env_summary(env) -> dict:
    if isinstance(env, envs.ThermalEnvironment):
        return {
            "kind": "thermal",
            "tau": env.tau,
            "omega": env.omega,
            "g": env.g,
            "gp": env.gp,
            "separable": env.is_separable,
            "boundary": env.is_boundary,
        }
    return {"kind": "additive", "n": env.n, "c": env.c, "cp": env.cp, "separable": True}


def _write_text(args, text: str):
    out = getattr(args, "out", None)
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# point


def cmd_point(args) -> int:
    env = _build_env(args)
    mu = _mu_value(args)
    xi = float(_resolve(args, "xi", 1.0))
    if math.isinf(mu):
        report = prot.protocol_report_asymptotic(env)
    else:
        phi = _resolve(args, "phi")
        inp = prot.SwapInput(mu, env, None if phi is None else float(phi))
        report = prot.protocol_report(inp, xi)
    payload = {"env": _env_summary(env), "report": report.to_dict()}
    _write_text(args, json.dumps(_jsonable(payload), indent=2) + "\n")
    return 0


# ---------------------------------------------------------------------------
# scan


def _cell_metrics(protocol, env, mu, xi, asym):
    if protocol == "quad-entanglement":
        info = envs.env_mutual_information(env)
        if asym:
            region = ent.quadripartite_classify(env)
            return [info, region.sigma_prime, region.sigma_double_prime, region.region]
        cm = prot.evolved_cm(prot.SwapInput(mu, env))
        ml_a = ent.ppt_min_eigenvalue(cm, [0])
        ml_ap = ent.ppt_min_eigenvalue(cm, [2])
        tol = ent.PSD_ABS_TOL
        if abs(ml_a) < tol or abs(ml_ap) < tol:
            region = "boundary"
        elif ml_a >= 0 and ml_ap >= 0:
            region = "I"
        elif ml_a >= 0:
            region = "II"
        elif ml_ap >= 0:
            region = "III"
        else:
            region = "IV"
        return [info, ml_a, ml_ap, region]
    if protocol == "bipartite":
        survey = ent.bipartite_survey(prot.SwapInput(mu, env))
        return [survey["aAp"], survey["aBp"], survey["ab"], survey["ApBp"]]
    if protocol == "tripartite":
        verdict = ent.tripartite_classify_triplet(prot.SwapInput(mu, env))
        return [verdict.class_id, verdict.certified]
    if protocol == "qkd-asymptotic":
        report = prot.protocol_report_asymptotic(env)
        return [report.epsilon, report.key_rate, report.key_rate_lb, report.flags["qkd_ok"]]
    if asym:
        report = prot.protocol_report_asymptotic(env)
    else:
        report = prot.protocol_report(prot.SwapInput(mu, env), xi)
    if protocol == "swap":
        return [report.epsilon, report.log_neg, report.flags["swap_ok"]]
    if protocol == "teleport":
        return [report.fidelity, report.flags["tele_quantum"]]
    if protocol == "distill":
        return [report.coherent_info, report.flags["distill_ok"]]
    if protocol == "qkd":
        return [report.key_rate, report.flags["qkd_ok"]]
    raise ValidationError(f"unknown protocol {protocol!r}")


def cmd_scan(args) -> int:
    protocol = _resolve(args, "protocol")
    if protocol not in SCAN_PROTOCOLS:
        raise ValidationError(f"--protocol must be one of {', '.join(SCAN_PROTOCOLS)}")
    if _resolve(args, "mu") is None and protocol in ("qkd-asymptotic", "quad-entanglement"):
        mu = math.inf  # inherently large-mu analyzers
    else:
        mu = _mu_value(args)
    asym = math.isinf(mu)
    if asym and protocol in ("bipartite", "tripartite"):
        raise ValidationError(f"{protocol} scans need a finite --mu")
    xi = float(_resolve(args, "xi", 1.0))
    threads = int(_resolve(args, "threads", 1))
    if threads < 1:
        raise ValidationError("--threads must be >= 1")

    tau = _resolve(args, "tau")
    if protocol == "quad-entanglement" and tau is None:
        raise ValidationError("quad-entanglement scans are defined for the thermal family")
    metric_cols = _METRIC_COLUMNS[protocol]
    cells = []
    if tau is not None:
        tau = float(tau)
        omega = _resolve(args, "omega")
        if omega is None:
            raise ValidationError("thermal scans need --omega")
        omega = float(omega)
        g_axis = _parse_axis(str(_resolve(args, "g", "")), "g")
        gp_axis = _parse_axis(str(_resolve(args, "gp", "")), "gp")
        if len(g_axis) < 2 or len(gp_axis) < 2:
            raise ValidationError("scan axes need at least 2 points each")
        header = ["g", "gp", "physical", "separable", "boundary", *metric_cols]
        for g in g_axis:  # row-major: g outer, gp inner
            for gp in gp_axis:
                cells.append(("thermal", tau, omega, float(g), float(gp)))
    else:
        n = _resolve(args, "n")
        c_spec, cp_spec = _resolve(args, "c"), _resolve(args, "cp")
        if n is None:
            raise ValidationError("additive scans need --n")
        n_axis = _parse_axis(str(n), "n")
        if len(n_axis) > 1:
            c0, cp0 = float(c_spec or 0.0), float(cp_spec or 0.0)
            header = ["n", "physical", "separable", "boundary", *metric_cols]
            for nv in n_axis:
                cells.append(("additive", float(nv), c0, cp0))
        else:
            c_axis = _parse_axis(str(c_spec or ""), "c")
            cp_axis = _parse_axis(str(cp_spec or ""), "cp")
            if len(c_axis) < 2 or len(cp_axis) < 2:
                raise ValidationError("scan axes need at least 2 points each")
            header = ["c", "cp", "physical", "separable", "boundary", *metric_cols]
            for cv in c_axis:
                for cpv in cp_axis:
                    cells.append(("additive2", float(n_axis[0]), float(cv), float(cpv)))

    def evaluate(cell):
        kind = cell[0]
        try:
            if kind == "thermal":
                _, t, w, g, gp = cell
                env = envs.ThermalEnvironment(t, w, g, gp)
                coords = [g, gp]
            elif kind == "additive":
                _, nv, c0, cp0 = cell
                env = envs.AdditiveEnvironment(nv, c0, cp0)
                coords = [nv]
            else:
                _, nv, cv, cpv = cell
                env = envs.AdditiveEnvironment(nv, cv, cpv)
                coords = [cv, cpv]
        except ValidationError:
            coords = list(cell[3:5]) if kind == "thermal" else (
                [cell[1]] if kind == "additive" else list(cell[2:4])
            )
            return coords + [False, None, None] + [None] * len(metric_cols)
        separable = env.is_separable if isinstance(env, envs.ThermalEnvironment) else True
        boundary = env.is_boundary if isinstance(env, envs.ThermalEnvironment) else False
        metrics = _cell_metrics(protocol, env, mu, xi, asym)
        return coords + [True, separable, boundary] + metrics

    if threads == 1:
        rows = [evaluate(cell) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(evaluate, cells))

    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _write_text(args, "\r\n".join(lines) + "\r\n")
    return 0


# ---------------------------------------------------------------------------
# thresholds


_THRESHOLD_METRICS = ("swap", "distill", "qkd", "qkd-lb")


def _threshold_metric(name, env, mu, xi):
    """Signed distance to the protocol threshold; positive means active."""
    if name == "swap":
        if math.isinf(mu):
            return 1.0 - prot.swap_epsilon_asymptotic(env)
        return 1.0 - prot.swap_epsilon(prot.SwapInput(mu, env))
    if name == "distill":
        if math.isinf(mu):
            val = prot.coherent_information_asymptotic(env)
            return math.inf if val == math.inf else val
        return prot.coherent_information(prot.SwapInput(mu, env))
    if name == "qkd":
        if math.isinf(mu):
            return prot.qkd_rate_asymptotic(env)[0]
        return prot.qkd_rate(prot.SwapInput(mu, env), xi)
    if name == "qkd-lb":
        if not math.isinf(mu):
            raise ValidationError("qkd-lb is an asymptotic metric; use --mu inf")
        return prot.qkd_rate_asymptotic(env)[1]
    raise ValidationError(f"--metric must be one of {', '.join(_THRESHOLD_METRICS)}")


def cmd_thresholds(args) -> int:
    metric = _resolve(args, "metric")
    mu = _mu_value(args)
    xi = float(_resolve(args, "xi", 1.0))
    tau = _resolve(args, "tau")
    if tau is not None:
        tau = float(tau)
        omega = float(_resolve(args, "omega"))
        col_axis = _parse_axis(str(_resolve(args, "gp", "")), "gp")
        sweep_axis = _parse_axis(str(_resolve(args, "g", "")), "g")
        header = ["gp", "g", "metric"]

        def make_env(col, x):
            return envs.ThermalEnvironment(tau, omega, x, col)

    else:
        n = float(_resolve(args, "n"))
        col_axis = _parse_axis(str(_resolve(args, "cp", "")), "cp")
        sweep_axis = _parse_axis(str(_resolve(args, "c", "")), "c")
        header = ["cp", "c", "metric"]

        def make_env(col, x):
            return envs.AdditiveEnvironment(n, x, col)

    if len(sweep_axis) < 2:
        raise ValidationError("the swept axis needs at least 2 points")

    def value_at(col, x):
        try:
            env = make_env(col, x)
        except ValidationError:
            return None
        return _threshold_metric(metric, env, mu, xi)

    lines = [",".join(header)]
    for col in col_axis:
        samples = [(float(x), value_at(col, float(x))) for x in sweep_axis]
        for (x0, f0), (x1, f1) in zip(samples, samples[1:]):
            if f0 is None or f1 is None or math.isinf(f0) or math.isinf(f1):
                continue
            if (f0 > 0.0) == (f1 > 0.0):
                continue
            lo, hi, flo = x0, x1, f0
            while hi - lo > BISECTION_TOL:
                mid = 0.5 * (lo + hi)
                fm = value_at(col, mid)
                if fm is None:
                    break
                if (fm > 0.0) == (flo > 0.0):
                    lo, flo = mid, fm
                else:
                    hi = mid
            lines.append(",".join([_fmt(float(col)), _fmt(0.5 * (lo + hi)), metric]))
    _write_text(args, "\r\n".join(lines) + "\r\n")
    return 0


# ---------------------------------------------------------------------------
# experiment


def cmd_experiment(args) -> int:
    n_axis = _parse_axis(str(_resolve(args, "n", "")), "n")
    mu = float(_resolve(args, "mu", 52.0))
    c = float(_resolve(args, "c", 1.0))
    cp = float(_resolve(args, "cp", 1.0))
    eta = float(_resolve(args, "eta", 1.0))
    xi = float(_resolve(args, "xi", 1.0))
    shots = int(_resolve(args, "shots", 10**6))
    seed = int(_resolve(args, "seed", 0))
    chunk = int(_resolve(args, "chunk_shots", expmt.DEFAULT_CHUNK))
    dump = getattr(args, "dump", None)
    if dump and len(n_axis) != 1:
        raise ValidationError("--dump needs a single-point sweep (one n value)")

    points = []
    for idx, nv in enumerate(n_axis):
        env = envs.AdditiveEnvironment(float(nv), c, cp)
        config = expmt.ExperimentConfig(
            mu=mu,
            env=env,
            shots=shots,
            seed=seed,
            relay_efficiency=eta,
            xi=xi,
            stream=idx,
        )
        batch = expmt.simulate_shot_batch(config, chunk_shots=chunk)
        if dump:
            with open(dump, "w", encoding="utf-8", newline="") as fh:
                batch.write_csv(fh)
        point = {"n": float(nv)}
        try:
            est = expmt.estimate_conditional_cm(batch, mu, xi)
            point.update(
                {
                    "key_rate_hat": est.key_rate_hat,
                    "mutual_info": est.mutual_info,
                    "holevo": est.holevo,
                    "cm_hat": est.cm_hat.reshape(-1),
                    "stderr_bands": est.stderr.reshape(-1),
                    "sample_count": est.sample_count,
                }
            )
        except (ValidationError, NumericDegeneracyError) as exc:
            point["error"] = str(exc)
        point["key_rate_theory"] = prot.additive_qkd_rate(mu, env, xi)
        point["repeater_bound"] = prot.repeater_bound_phi(float(nv))
        points.append(point)

    payload = {
        "config": {
            "mu": mu,
            "c": c,
            "cp": cp,
            "eta": eta,
            "xi": xi,
            "shots": shots,
            "seed": seed,
            "n_values": list(map(float, n_axis)),
        },
        "rng": {
            "algorithm": expmt.RNG_ALGORITHM,
            "key_scheme": "key=[seed, point_index]",
            "draws_per_shot": expmt.DRAWS_PER_SHOT,
            "chunk_shots": chunk,
        },
        "points": points,
    }
    _write_text(args, json.dumps(_jsonable(payload), indent=2) + "\n")
    return 0


# ---------------------------------------------------------------------------
# argument plumbing


def _add_common(p):
    p.add_argument("--config", help="flat key-value defaults file")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--tau")
    p.add_argument("--omega")
    p.add_argument("--g")
    p.add_argument("--gp")
    p.add_argument("--n")
    p.add_argument("--c")
    p.add_argument("--cp")
    p.add_argument("--mu")
    p.add_argument("--xi")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvrelay",
        description="Quantum-relay protocols in correlated Gaussian environments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("point", help="all analyzers at one parameter point (JSON)")
    _add_common(p)
    p.add_argument("--phi")
    p.set_defaults(func=cmd_point)

    p = sub.add_parser("scan", help="grid scan over a correlation plane (CSV)")
    _add_common(p)
    p.add_argument("--protocol")
    p.add_argument("--threads")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("thresholds", help="trace protocol zero contours (CSV)")
    _add_common(p)
    p.add_argument("--metric")
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("experiment", help="shot-level simulated sweep (JSON)")
    _add_common(p)
    p.add_argument("--eta")
    p.add_argument("--shots")
    p.add_argument("--seed")
    p.add_argument("--chunk-shots", dest="chunk_shots")
    p.add_argument("--dump", help="CSV shot dump path (single-point sweeps)")
    p.set_defaults(func=cmd_experiment)

    return parser


_VALUE_FLAGS = ("--g", "--gp", "--c", "--cp", "--n", "--mu", "--phi", "--tau", "--omega", "--xi")
_NEGATIVE_VALUE = re.compile(r"^-(\d|\.)[\d.:eE+-]*$")


def _merge_negative_values(argv):
    """Join '--flag -lo:hi:step' into '--flag=-lo:hi:step' for argparse."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv) and _NEGATIVE_VALUE.match(argv[i + 1]):
            out.append(tok + "=" + argv[i + 1])
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_merge_negative_values(sys.argv[1:] if argv is None else list(argv)))
    try:
        args._config = _load_config(args.config) if getattr(args, "config", None) else {}
        return args.func(args)
    except ValidationError as exc:
        sys.stdout.write(json.dumps({"error": {"code": 2, "message": str(exc)}}) + "\n")
        return 2
    except NumericDegeneracyError as exc:
        sys.stdout.write(json.dumps({"error": {"code": 3, "message": str(exc)}}) + "\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
