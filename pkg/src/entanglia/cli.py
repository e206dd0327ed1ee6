"""Command-line front end. Every subcommand reads MatrixFile JSON, calls one
library operation and prints a Report as JSON on stdout."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import apps, blockpos, channels, schmidt, sknorm
from .conic import SolverError
from .densemat import DimensionError

log = logging.getLogger("entanglia")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3
EXIT_DETECTED = 10


class InputError(ValueError):
    pass


# serialisation

def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _to_plain(obj):
    """Convert numpy arrays, complex values and fractions into JSON-ready data."""
    if isinstance(obj, dict):
        return {str(k): _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"re": _to_plain(obj.real.tolist()), "im": _to_plain(obj.imag.tolist())}
        return _to_plain(obj.tolist())
    if isinstance(obj, Fraction):
        return {"fraction": f"{obj.numerator}/{obj.denominator}", "value": float(obj)}
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _write(obj, out: list, indent: int) -> None:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for i, (k, v) in enumerate(items):
            out.append(f"{pad}  {json.dumps(k)}: ")
            _write(v, out, indent + 1)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, list):
        if all(not isinstance(v, (dict, list)) for v in obj):
            out.append("[" + ", ".join(_scalar(v) for v in obj) + "]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad + "  ")
            _write(v, out, indent + 1)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "]")
    else:
        out.append(_scalar(obj))


def _scalar(v) -> str:
    if isinstance(v, bool) or v is None or isinstance(v, (str, int)):
        return json.dumps(v)
    if isinstance(v, float):
        return _fmt_float(v)
    raise TypeError(f"cannot serialise {type(v).__name__}")


def dumps(obj) -> str:
    """JSON text with every float written to 17 significant digits."""
    out: list = []
    _write(_to_plain(obj), out, 0)
    return "".join(out) + "\n"


def loads(text: str):
    return json.loads(text)


# input

def _array(data, key="re"):
    re = np.asarray(data[key], dtype=float)
    im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
    if re.shape != im.shape:
        raise InputError("re and im arrays differ in shape")
    return re + 1j * im if np.any(im) else re


def read_matrix_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError("MatrixFile must be a JSON object")
    out = {"raw": data, "m": data.get("m"), "n": data.get("n"), "dims": data.get("dims")}
    if "re" in data:
        a = _array(data)
        if a.ndim not in (1, 2):
            raise InputError("re/im must be 1-D or 2-D arrays")
        out["array"] = a
        m, n = out["m"], out["n"]
        if m is not None and n is not None and a.ndim == 2 and a.shape[0] == a.shape[1] and a.shape[0] > 1:
            if a.shape != (m * n, m * n):
                raise InputError(f"array shape {a.shape} does not match m={m}, n={n}")
    if "kraus" in data:
        out["kraus"] = [_array(op) for op in data["kraus"]]
    return out


def write_matrix_file(a, m=None, n=None) -> dict:
    a = np.asarray(a)
    d = {"re": a.real, "im": a.imag if np.iscomplexobj(a) else np.zeros_like(a, dtype=float)}
    if m is not None:
        d = {"m": m, "n": n, **d}
    return d


def _dims(f: dict, args) -> tuple[int, int]:
    m = args.m if getattr(args, "m", None) else f["m"]
    n = args.n if getattr(args, "n", None) else f["n"]
    if m is None or n is None:
        raise InputError("factor dimensions m and n are required (in the file or via --m/--n)")
    return int(m), int(n)


def _vector(f: dict):
    if "array" not in f:
        raise InputError("MatrixFile has no re/im data")
    a = f["array"]
    if a.ndim == 2 and 1 not in a.shape:
        raise InputError("expected a vector (1-D array or a single column)")
    return a.reshape(-1)


def _operator(f: dict):
    if "array" not in f:
        raise InputError("MatrixFile has no re/im data")
    a = f["array"]
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError("expected a square matrix")
    return a


def _channel(f: dict, args) -> channels.Channel:
    if "kraus" in f:
        return channels.choi_from_kraus(f["kraus"])
    m, n = _dims(f, args)
    return channels.Channel(_operator(f), m, n)


def _digest(f: dict | None) -> str | None:
    if f is None:
        return None
    text = json.dumps(f["raw"], sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


# results

def _estimate_dict(est: sknorm.NormEstimate) -> dict:
    cert = {k: v for k, v in est.upper_certificate.items()}
    return {
        "lower": est.lower,
        "upper": est.upper,
        "width": est.width,
        "methods": {"lower": est.methods[0], "upper": est.methods[1]},
        "witness": est.lower_witness,
        "witness_value": est.witness_value,
        "upper_certificate": cert,
        "bounds": dict(sorted(est.bounds.items())),
    }


def _verdict_dict(v: blockpos.BPVerdict) -> dict:
    return {"status": v.status, "rule": v.rule, "witness": v.witness, "details": v.details}


def cmd_schmidt(args, f):
    m, n = _dims(f, args)
    sd = schmidt.schmidt_decompose(_vector(f), m, n)
    return {"coefficients": sd.coefficients, "rank": sd.rank, "left": sd.left, "right": sd.right}, \
        ["svd"], EXIT_OK


def cmd_vec_norm(args, f):
    m, n = _dims(f, args)
    return {"value": schmidt.sk_vector_norm(_vector(f), m, n, args.k)}, ["schmidt"], EXIT_OK


def cmd_vec_dual_norm(args, f):
    m, n = _dims(f, args)
    val, w = schmidt.sk_vector_dual_norm(_vector(f), m, n, args.k, return_optimizer=True)
    return {"value": val, "optimizer": w}, ["waterfill"], EXIT_OK


def cmd_op_norm(args, f):
    dims = _dims(f, args)
    x = _operator(f)
    k, method = args.k, args.method
    res: dict = {}
    if method == "all":
        est = sknorm.estimate(x, dims, k, budget=args.budget, seed=args.seed, restarts=args.restarts,
                              workers=args.threads)
        res = _estimate_dict(est)
        return res, est.methods, EXIT_OK
    if method == "seesaw":
        val, w = sknorm.sk_lower_seesaw(x, dims, k, restarts=args.restarts or 50, seed=args.seed,
                                        workers=args.threads)
        res = {"lower": val, "witness": w, "witness_value": sknorm.expectation(x, w)}
    elif method == "spectral":
        res = {"upper": sknorm.sk_upper_spectral(x, dims, k)}
    elif method == "realign":
        res = {"upper": sknorm.sk_upper_realign(x, dims, k)}
    elif method == "kpos-sdp":
        choice = args.map or ("transpose" if k == 1 else "reduction")
        val, y, info = sknorm.sk_upper_kpos_sdp(x, dims, k, choice)
        res = {"upper": val, "map": choice, "certificate_Y": y, "solver": info}
    elif method == "dps":
        if k != 1:
            raise InputError("the symmetric-extension hierarchy bounds the S(1) norm only; use --k 1")
        val, w, info = sknorm.dps_sdp_s1(x, dims, args.s, with_ppt=args.ppt)
        res = {"upper": val, "s": args.s, "ppt": args.ppt, "certificate_W": w,
               "certificate_value": sknorm.dps_certificate_value(x, dims, args.s, w), "solver": info}
    return res, [method], EXIT_OK


def cmd_block_positive(args, f):
    dims = _dims(f, args)
    x = _operator(f)
    k = args.k
    rules = ["spectral", "eig", "kraus"] if args.rule == "all" else [args.rule]
    verdicts = []
    for rule in rules:
        if rule == "spectral":
            verdicts.append(blockpos.spectral_test(x, dims, k, budget=args.budget, seed=args.seed))
        elif rule == "eig":
            verdicts.extend(blockpos.eig_structure_tests(x, dims, k))
        elif rule == "kraus":
            verdicts.append(blockpos.kraus_test(channels.Channel(x, *dims), k))
        elif rule == "two-eval":
            verdicts.append(blockpos.two_eval_test(x, dims, k, budget=args.budget, seed=args.seed))
    statuses = [v.status for v in verdicts]
    if blockpos.NOT_KBP in statuses and blockpos.KBP in statuses:
        raise ArithmeticError("conflicting verdicts from independent rules")
    overall = blockpos.NOT_KBP if blockpos.NOT_KBP in statuses else \
        blockpos.KBP if blockpos.KBP in statuses else blockpos.UNKNOWN
    code = EXIT_DETECTED if overall == blockpos.NOT_KBP else EXIT_OK
    return {"verdict": overall, "verdicts": [_verdict_dict(v) for v in verdicts]}, rules, code


def cmd_werner(args, f):
    n, a, k = args.n, args.alpha, args.k
    closed = apps.werner_sk_norm(n, a, k)
    rho = channels.werner_state(n, a)
    res = {"closed_form": closed, "thresholds": apps.werner_thresholds(n)}
    methods = ["closed_form"]
    if k < n:
        maps = ["transpose", "reduction"] if k == 1 else ["reduction"]
        sdp = {}
        for choice in maps:
            val, _, _ = sknorm.sk_upper_kpos_sdp(rho, (n, n), k, choice)
            sdp[choice] = val
        res["sdp_upper"] = sdp
        res["consistent"] = bool(min(sdp.values()) >= closed - 1e-6)
        methods += [f"kpos_{c}" for c in maps]
    return res, methods, EXIT_OK


def cmd_bound_ent(args, f):
    n, r = args.n, args.r
    res: dict = {"rank": apps.bound_proj_rank(n, r), "s1_norm": apps.bound_proj_s1(n, r)}
    if args.verify:
        ver = apps.bound_proj_s1(n, r, verify=True)
        res["s1_product_vector_value"] = ver.product_vector_value
        res["s1_pt_upper"] = ver.pt_max_eigenvalue
    if n >= 3:
        lo, up = apps.bound_proj_s2_bounds(n, r)
        res["s2_bounds"] = {"lower": lo, "upper": up}
        res["s2_conjectured"] = {"value": lo, "status": "conjecture, not asserted"}
        thr = apps.undistillable_region(n, r)
        res["p"] = thr.p
        res["theorem_applicable"] = thr.applicable
        res["threshold_alpha"] = thr.alpha
        if thr.alpha_exact is not None:
            res["threshold_alpha_exact"] = thr.alpha_exact
        if args.alpha is not None:
            alpha = Fraction(args.alpha) if "/" in args.alpha else float(args.alpha)
            c = apps.certify(n, r, alpha)
            res["certify"] = {"certified": c.certified, "rule": c.rule, "margin": c.margin,
                              "strict_margin": c.strict_margin, "within_threshold": c.within_threshold,
                              "details": c.details}
    return res, ["closed_form"], EXIT_OK


def cmd_gate_fidelity(args, f):
    ch = _channel(f, args)
    rep = apps.min_gate_fidelity(ch, budget=args.budget, seed=args.seed)
    return {"lower": rep.lower, "upper": rep.upper, "lambda_max": rep.lambda_max,
            "s1_estimate": _estimate_dict(rep.estimate)}, rep.estimate.methods, EXIT_OK


def cmd_output_purity(args, f):
    ch = _channel(f, args)
    est = apps.max_output_purity(ch, args.k, budget=args.budget, seed=args.seed)
    res = _estimate_dict(est)
    res["cb"] = {"choi_route": apps.cb_output_purity_choi(ch),
                 "complementary_route": apps.cb_output_purity_complementary(ch)}
    return res, est.methods, EXIT_OK


def cmd_realign_test(args, f):
    dims = _dims(f, args)
    val, detected = apps.realignment_test(_operator(f), dims, args.k)
    return {"value": val, "detected": detected,
            "verdict": f"SN > {args.k} certified" if detected else "inconclusive"}, ["realignment"], \
        EXIT_DETECTED if detected else EXIT_OK


def cmd_reduction_test(args, f):
    dims = _dims(f, args)
    detected, det = apps.reduction_test(_operator(f), dims, args.k)
    return {"detected": detected, "min_eigenvalues": det,
            "verdict": f"SN > {args.k} certified" if detected else "inconclusive"}, ["reduction"], \
        EXIT_DETECTED if detected else EXIT_OK


def cmd_geom_measure(args, f):
    dims = args.dims or f.get("dims")
    if dims is None:
        if f["m"] is not None and f["n"] is not None:
            dims = [f["m"], f["n"]]
        else:
            raise InputError("--dims (or a dims field) is required")
    g = apps.geometric_measure(_vector(f), [int(d) for d in dims], budget=args.budget, seed=args.seed)
    res = {"lower": g.lower, "upper": g.upper, "certified": g.certified}
    if g.witness is not None:
        res["product_factors"] = g.witness
    if len(dims) == 4:
        res["A_v"] = g.operator
    return res, [g.method], EXIT_OK


def cmd_channel(args, f):
    res: dict = {}
    ch = _channel(f, args)
    if args.to_kraus:
        ks = channels.kraus_from_choi(ch)
        res["kraus"] = {"left": ks.left, "right": ks.right, "weights": ks.weights, "cp_form": ks.is_cp_form}
    if args.to_choi:
        res["choi"] = write_matrix_file(ch.choi, ch.in_dim, ch.out_dim)
    if args.complementary:
        comp = channels.complementary_channel(ch)
        res["complementary"] = write_matrix_file(comp.choi, comp.in_dim, comp.out_dim)
    if args.check_tp:
        res["trace_preserving"] = channels.is_trace_preserving(ch)
        res["completely_positive"] = channels.is_cp(ch)
        res["unital"] = channels.is_unital(ch)
    return res, ["channels"], EXIT_OK


COMMANDS = {
    "schmidt": cmd_schmidt, "vec-norm": cmd_vec_norm, "vec-dual-norm": cmd_vec_dual_norm,
    "op-norm": cmd_op_norm, "block-positive": cmd_block_positive, "werner": cmd_werner,
    "bound-ent": cmd_bound_ent, "gate-fidelity": cmd_gate_fidelity, "output-purity": cmd_output_purity,
    "realign-test": cmd_realign_test, "reduction-test": cmd_reduction_test,
    "geom-measure": cmd_geom_measure, "channel": cmd_channel,
}
NO_INPUT = {"werner", "bound-ent"}


def _default_seed() -> int:
    env = os.environ.get("ENTANGLIA_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"ENTANGLIA_SEED must be an integer, got {env!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default: $ENTANGLIA_SEED or 0)")
    common.add_argument("--threads", type=int, default=1, help="worker cap for see-saw restarts")
    common.add_argument("--budget", choices=sknorm.BUDGETS, default="default")
    common.add_argument("--verbose", "-v", action="store_true")

    filed = argparse.ArgumentParser(add_help=False, parents=[common])
    filed.add_argument("input", help="MatrixFile JSON")
    filed.add_argument("--m", type=int, default=None)
    filed.add_argument("--n", type=int, default=None)

    p = argparse.ArgumentParser(prog="entanglia", description="S(k) operator norms and entanglement tools")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("schmidt", parents=[filed])
    for name in ("vec-norm", "vec-dual-norm", "output-purity", "realign-test", "reduction-test"):
        sub.add_parser(name, parents=[filed]).add_argument("--k", type=int, default=1)
    q = sub.add_parser("op-norm", parents=[filed])
    q.add_argument("--k", type=int, default=1)
    q.add_argument("--method", choices=["seesaw", "spectral", "realign", "kpos-sdp", "dps", "all"], default="all")
    q.add_argument("--s", type=int, default=1)
    q.add_argument("--ppt", action="store_true")
    q.add_argument("--restarts", type=int, default=None)
    q.add_argument("--map", choices=["transpose", "reduction"], default=None)
    q = sub.add_parser("block-positive", parents=[filed])
    q.add_argument("--k", type=int, default=1)
    q.add_argument("--rule", choices=["spectral", "eig", "kraus", "two-eval", "all"], default="all")
    q = sub.add_parser("werner", parents=[common])
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--alpha", type=float, required=True)
    q.add_argument("--k", type=int, default=1)
    q = sub.add_parser("bound-ent", parents=[common])
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--r", type=int, required=True)
    q.add_argument("--alpha", default=None, help="decimal or exact fraction such as 2/7")
    q.add_argument("--verify", action="store_true", help="dense check of the S(1) closed form")
    sub.add_parser("gate-fidelity", parents=[filed])
    sub.add_parser("geom-measure", parents=[filed]).add_argument("--dims", type=int, nargs="+", default=None)
    q = sub.add_parser("channel", parents=[filed])
    q.add_argument("--to-kraus", action="store_true")
    q.add_argument("--to-choi", action="store_true")
    q.add_argument("--complementary", action="store_true")
    q.add_argument("--check-tp", action="store_true")
    return p


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.seed is None:
            args.seed = _default_seed()
        if args.threads < 1:
            raise InputError("--threads must be >= 1")
        f = None if args.command in NO_INPUT else read_matrix_file(args.input)
        t0 = time.perf_counter()
        results, methods, code = COMMANDS[args.command](args, f)
        elapsed = time.perf_counter() - t0
    except (InputError, DimensionError, ValueError, KeyError, TypeError) as exc:
        print(f"entanglia: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"entanglia: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    echo = {k: v for k, v in sorted(vars(args).items()) if k not in ("verbose",)}
    report = {
        "command": args.command,
        "args": echo,
        "inputs_digest": _digest(f),
        "seed": args.seed,
        "results": results,
        "methods": methods,
        "timing": {"seconds": elapsed},
    }
    stdout.write(dumps(report))
    return code


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
