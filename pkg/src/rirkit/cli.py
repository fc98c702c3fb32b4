"""Command line front end.

Subcommands: analyze (bounds, class, exactness, stabilizer as JSON),
stabilize (marginal plus strictly perturbed stabilizer), bode (CSV of
gain, phase and their change rates), nyquist (CSV of the shifted loop
locus with crossing counts in the header), crmax (extremal change-rate
query) and sweep2nd (CSV case-law sweep of the second-order family).

Transfer functions enter as JSON objects {"num": [...], "den": [...]}
with ascending coefficients, inline (--tf) or from a file (--tf-file).
All floats are emitted rounded to 12 significant digits so repeated runs
are byte-identical.  Exit codes: 1 malformed input, 2 admissibility
failures (not in the class, or interlacing fails), 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .config import DEFAULT, Tolerances
from .crmax import (
    CrMaxProblem,
    GridBudget,
    attain_sup,
    brute_force_sup,
    closed_form_sup,
)
from .errors import (
    AnalysisError,
    DomainViolation,
    EmptyFeasibleSet,
    MalformedInput,
    NotInG,
    PipFailed,
    TangentialCrossing,
)
from .freq import change_rates
from .poly import RationalTF
from .rir import (
    Stabilizer,
    exact_rir_certificate,
    perturb_to_strict,
    second_order_closed_form,
    synthesize_marginal_stabilizer,
)
from .stability import default_epsilon, nyquist_crossings

__all__ = ["main"]


def _round12(x: float) -> float:
    if not math.isfinite(x):
        return x
    return float(f"{x:.12g}")


def _clean(obj):
    """Recursively round floats for deterministic serialization."""
    if isinstance(obj, float):
        return _round12(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{_round12(x):.12g}"
    return str(x)


class _CliParser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: A003 - argparse API
        raise MalformedInput(message)


def _tf_from_spec(data) -> RationalTF:
    if not isinstance(data, dict) or "num" not in data or "den" not in data:
        raise MalformedInput('transfer function JSON needs "num" and "den" arrays')
    num, den = data["num"], data["den"]
    if not isinstance(num, list) or not isinstance(den, list):
        raise MalformedInput('"num" and "den" must be arrays of numbers')
    try:
        num = [float(c) for c in num]
        den = [float(c) for c in den]
    except (TypeError, ValueError) as exc:
        raise MalformedInput(f"non-numeric coefficient: {exc}") from None
    return RationalTF(num, den)


def _load_tf(args, tol: Tolerances) -> RationalTF:
    if getattr(args, "tf", None) is not None:
        raw = args.tf
    elif getattr(args, "tf_file", None) is not None:
        try:
            with open(args.tf_file, "r", encoding="utf-8") as fh:
                raw = fh.read()
        except OSError as exc:
            raise MalformedInput(f"cannot read {args.tf_file}: {exc}") from None
    else:
        raise MalformedInput("provide a transfer function with --tf or --tf-file")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"invalid JSON: {exc}") from None
    tf = _tf_from_spec(data)
    return RationalTF(list(tf.num.coeffs), list(tf.den.coeffs), tol)


def _resolve_tol(args) -> tuple[Tolerances, float | None]:
    """Tolerances and explicit epsilon from config file plus flags."""
    overrides = {}
    epsilon = None
    if getattr(args, "config", None) is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise MalformedInput(f"cannot read config: {exc}") from None
        if not isinstance(cfg, dict):
            raise MalformedInput("config file must hold a JSON object")
        if "tol_axis" in cfg:
            overrides["axis"] = float(cfg["tol_axis"])
        if "tol_cond" in cfg:
            overrides["cond"] = float(cfg["tol_cond"])
        if "epsilon" in cfg:
            epsilon = float(cfg["epsilon"])
    if getattr(args, "tol_axis", None) is not None:
        overrides["axis"] = args.tol_axis
    if getattr(args, "tol_cond", None) is not None:
        overrides["cond"] = args.tol_cond
    if getattr(args, "epsilon", None) is not None:
        epsilon = args.epsilon
    tol = DEFAULT.with_overrides(**overrides) if overrides else DEFAULT
    return tol, epsilon


def _poles_json(rootset) -> list:
    return [
        {"re": z.real, "im": z.imag, "multiplicity": m}
        for z, m in rootset.roots
    ]


def _certificate_json(cert) -> dict | None:
    if cert is None:
        return None
    return {
        "status": cert.status,
        "reason": cert.reason,
        "nu_o": cert.nu_o,
        "phase_cr": cert.phase_cr,
        "n": cert.n,
    }


def _stabilizer_json(st: Stabilizer | None) -> dict | None:
    if st is None:
        return None
    return {
        "num": list(st.delta.num.coeffs),
        "den": list(st.delta.den.coeffs),
        "kind": st.kind,
        "hinf_norm": st.hinf_norm,
        "omega_c": st.omega_c,
        "a": st.a,
        "epsilon": st.epsilon,
        "certificate": _certificate_json(st.certificate),
    }


def _report_json(rep) -> dict:
    cm = rep.membership
    peaks = cm.peaks
    return {
        "bounds": {"rho_p": rep.rho_p, "rho_o": rep.rho_o},
        "class": {
            "in_G": cm.in_G,
            "n": cm.n,
            "pip": cm.pip,
            "subclass": cm.subclass,
            "peak_gain": None if peaks is None else peaks.peak_gain,
            "peaks": None if peaks is None else [
                ("inf" if math.isinf(w) else w) for w in peaks.peaks
            ],
            "dense": None if peaks is None else peaks.dense,
        },
        "exactness": {
            "status": rep.exactness.status,
            "value": rep.exactness.value,
            "reason": rep.exactness.reason,
        },
        "margin": rep.margin,
        "notch_consistent": rep.notch_consistent,
        "stabilizer": _stabilizer_json(rep.stabilizer),
        "closed_loop_poles": (
            None if rep.stabilizer is None else _poles_json(rep.stabilizer.cl_poles)
        ),
    }


def _emit(args, text: str) -> None:
    out = getattr(args, "out", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, obj) -> None:
    _emit(args, json.dumps(_clean(obj), indent=2) + "\n")


def _cmd_analyze(args) -> int:
    tol, _ = _resolve_tol(args)
    g = _load_tf(args, tol)
    rep = exact_rir_certificate(g, tol)
    _emit_json(args, _report_json(rep))
    return 0


def _cmd_stabilize(args) -> int:
    tol, _ = _resolve_tol(args)
    g = _load_tf(args, tol)
    at_peak = args.at_peak
    marginal = synthesize_marginal_stabilizer(g, tol, at_peak=at_peak)
    strict = perturb_to_strict(g, marginal, tol=tol)
    _emit_json(args, {
        "marginal": _stabilizer_json(marginal),
        "strict": _stabilizer_json(strict),
        "strict_closed_loop_poles": _poles_json(strict.cl_poles),
    })
    return 0


def _cmd_bode(args) -> int:
    tol, _ = _resolve_tol(args)
    g = _load_tf(args, tol)
    if args.wmin <= 0 or args.wmax <= args.wmin or args.points < 2:
        raise MalformedInput("need 0 < wmin < wmax and at least two points")
    grid = np.logspace(math.log10(args.wmin), math.log10(args.wmax), args.points)
    lines = [
        f"# tol_axis = {_fmt(tol.axis)}, tol_cond = {_fmt(tol.cond)}",
        "omega,gain_log,phase,gain_cr,phase_cr,sigma_gain_cr,sigma_phase_cr",
    ]
    for w in grid:
        fs = change_rates(g, float(w), tol)
        lines.append(",".join(_fmt(v) for v in (
            fs.omega, fs.gain_log, fs.phase, fs.gain_cr, fs.phase_cr,
            fs.sigma_gain_cr, fs.sigma_phase_cr,
        )))
    _emit(args, "\n".join(lines) + "\n")
    return 0


def _nyquist_at(L, eps: float, tol: Tolerances):
    try:
        return nyquist_crossings(L, eps, tol), eps
    except TangentialCrossing:
        return nyquist_crossings(L, eps / 10.0, tol), eps / 10.0


def _cmd_nyquist(args) -> int:
    tol, epsilon = _resolve_tol(args)
    L = _load_tf(args, tol)
    if epsilon is None:
        epsilon = default_epsilon(L, tol)
    nc, eps_used = _nyquist_at(L, epsilon, tol)
    nc_check, eps_check = _nyquist_at(L, eps_used / 10.0, tol)
    if args.wmax <= 0 or args.points < 2:
        raise MalformedInput("need wmax > 0 and at least two points")
    grid = np.linspace(0.0, args.wmax, args.points)
    values = [L.eval_unchecked(eps_used + 1j * float(w)) for w in grid]
    lines = [
        f"# epsilon = {_fmt(eps_used)}, tol_axis = {_fmt(tol.axis)}, "
        f"tol_trans = {_fmt(tol.trans)}",
        f"# nu_o = {nc.nu_o} (nu_plus = {nc.nu_plus}, nu_minus = {nc.nu_minus})",
        "# crossings: " + "; ".join(
            f"omega = {_fmt(w)}, direction = {d:+d}"
            for w, d in zip(nc.crossing_freqs, nc.directions)
        ),
        f"# check at epsilon = {_fmt(eps_check)}: nu_o = {nc_check.nu_o}",
        "omega,re,im",
    ]
    for w, v in zip(grid, values):
        lines.append(",".join(_fmt(x) for x in (float(w), v.real, v.imag)))
    _emit(args, "\n".join(lines) + "\n")
    return 0


def _cmd_crmax(args) -> int:
    try:
        prob = CrMaxProblem(args.omega_p, args.theta_p)
        sup = closed_form_sup(prob)
        res = attain_sup(prob)
    except DomainViolation as exc:
        raise MalformedInput(str(exc)) from None
    out = {
        "omega_p": prob.omega_p,
        "theta_p": prob.theta_p,
        "sup": sup,
        "attained": {
            "descriptor": repr(res.descriptor),
            "num": list(res.tf.num.coeffs),
            "den": list(res.tf.den.coeffs),
            "phase_at_peak": res.phase_at_peak,
            "cr_at_peak": res.cr_at_peak,
        },
    }
    if args.brute is not None:
        budget = GridBudget(points=args.points)
        try:
            bf = brute_force_sup(prob, args.brute, budget)
            out["brute"] = {
                "family": bf.family,
                "best_cr": bf.best_cr,
                "phase_err": bf.phase_err,
                "n_feasible": bf.n_feasible,
                "polished": bf.polished,
            }
        except EmptyFeasibleSet as exc:
            out["brute"] = {"family": args.brute, "empty": True, "reason": str(exc)}
    _emit_json(args, out)
    return 0


def _cmd_sweep2nd(args) -> int:
    tol, _ = _resolve_tol(args)
    if args.pn < 1 or args.qn < 1:
        raise MalformedInput("need at least one grid point per axis")
    ps = np.linspace(args.pmin, args.pmax, args.pn)
    qs = np.linspace(args.qmin, args.qmax, args.qn)
    lines = [
        f"# tol_cond = {_fmt(tol.cond)}, tol_axis = {_fmt(tol.axis)}",
        "# rows with q = 0 are omitted (pole at the origin)",
        "p,q,n,class_tag,omega_p,m0,m_peak,exactness,rho_p",
    ]
    for p in ps:
        for q in qs:
            if q == 0.0:
                continue
            f = second_order_closed_form(float(p), float(q), tol)
            lines.append(",".join(_fmt(v) for v in (
                f.p, f.q, f.n, f.class_tag, f.omega_p, f.m0,
                f.m_peak, f.exactness, f.rho_p,
            )))
    _emit(args, "\n".join(lines) + "\n")
    return 0


def _add_tf_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tf", help="transfer function as inline JSON")
    p.add_argument("--tf-file", help="path to a transfer function JSON file")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol-axis", type=float, help="axis-pole band tolerance")
    p.add_argument("--tol-cond", type=float, help="condition dead-band tolerance")
    p.add_argument("--epsilon", type=float, help="axis shift for crossing counts")
    p.add_argument("--config", help="JSON config file with tolerance overrides")
    p.add_argument("--out", help="write output to a file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _CliParser(prog="rirkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="bounds, class and exactness report")
    _add_tf_args(p)
    _add_common(p)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("stabilize", help="marginal and strict stabilizers")
    _add_tf_args(p)
    _add_common(p)
    p.add_argument("--at-peak", type=float, help="synthesize at this peak frequency")
    p.set_defaults(func=_cmd_stabilize)

    p = sub.add_parser("bode", help="gain/phase change-rate CSV")
    _add_tf_args(p)
    _add_common(p)
    p.add_argument("--wmin", type=float, default=1e-2)
    p.add_argument("--wmax", type=float, default=1e2)
    p.add_argument("--points", type=int, default=200)
    p.set_defaults(func=_cmd_bode)

    p = sub.add_parser("nyquist", help="shifted loop locus CSV with crossing counts")
    _add_tf_args(p)
    _add_common(p)
    p.add_argument("--wmax", type=float, default=50.0)
    p.add_argument("--points", type=int, default=2001)
    p.set_defaults(func=_cmd_nyquist)

    p = sub.add_parser("crmax", help="extremal phase change rate query")
    _add_common(p)
    p.add_argument("--omega-p", type=float, required=True, dest="omega_p")
    p.add_argument("--theta-p", type=float, required=True, dest="theta_p")
    p.add_argument("--brute", choices=(
        "AP_first", "AP_second_real", "AP_second_complex", "AP_product",
    ), help="also sweep a brute-force family")
    p.add_argument("--points", type=int, default=2000)
    p.set_defaults(func=_cmd_crmax)

    p = sub.add_parser("sweep2nd", help="second-order case-law CSV sweep")
    _add_common(p)
    p.add_argument("--pmin", type=float, required=True)
    p.add_argument("--pmax", type=float, required=True)
    p.add_argument("--pn", type=int, required=True)
    p.add_argument("--qmin", type=float, required=True)
    p.add_argument("--qmax", type=float, required=True)
    p.add_argument("--qn", type=int, required=True)
    p.set_defaults(func=_cmd_sweep2nd)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except MalformedInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NotInG, PipFailed) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AnalysisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
