"""Command-line interface.

Subcommands: sip, orth, project, quotient, counterexample, verify, replay.
Every run prints (or writes with --out) a single JSON report whose "config"
block is fully normalised; `siplab replay report.json` re-runs the command
from that block and compares the results field by field.

Exit codes: 0 success, 2 verification failure (a residual above tolerance, a
failed search, or a replay mismatch), 1 usage/configuration errors.

SIPLAB_THREADS bounds the worker count of the direction sweep; results are
merged deterministically, so the report does not depend on it.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import reports
from .counterexample import build_instance, certify_h, near_lp_family
from .errors import (
    ConfigError,
    ConvergenceError,
    NoNonlinearComplementError,
    SiplabError,
)
from .norms import (
    LpNorm,
    SumSpace,
    SumStream,
    default_mixed_block,
    mixed_block,
    model_from_config,
)
from .ortho import SubspaceBasis, birkhoff_check, orthogonal_decompose, sip_orthogonal
from .quotient import QuotientSpace, quotient_norm, quotient_sip, section_map, verify_section_sip
from .sip import axioms_check, sip_eval
from .verify import (
    finite_dim_sl_probe,
    finite_section,
    hanner_suite,
    isometry_invariance_check,
    lp_sl_coordinate_case,
    sign_scramble,
    thm2_forward_harness,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2


def parse_norm(spec, dim_hint: int | None = None):
    """Norm from a config mapping or a compact spec string.

    Strings: ``default``, ``lp:p[:dim]``, ``mixed:p:size,q[;size,q...]``,
    ``sum:p:blocks:block_dim[:q]``, ``nearlp:p:epsilon``.
    """
    if isinstance(spec, dict):
        return model_from_config(spec)
    if not isinstance(spec, str):
        raise ConfigError(f"norm spec must be a string or mapping, got {type(spec).__name__}")
    s = spec.strip()
    if s == "default":
        return default_mixed_block()
    parts = s.split(":")
    try:
        if parts[0] == "lp":
            p = float(parts[1])
            dim = int(parts[2]) if len(parts) > 2 else dim_hint
            if dim is None:
                raise ConfigError("lp norm needs a dimension: lp:p:dim (or vectors to infer it)")
            return LpNorm(p, dim)
        if parts[0] == "mixed":
            p = float(parts[1])
            blocks = []
            for b in parts[2].split(";"):
                size, q = b.split(",")
                blocks.append((int(size), float(q)))
            return mixed_block(p, blocks)
        if parts[0] == "sum":
            p = float(parts[1])
            count = int(parts[2])
            bdim = int(parts[3])
            q = float(parts[4]) if len(parts) > 4 else p
            return SumSpace(p, (SumStream(LpNorm(q, bdim), count),))
        if parts[0] == "nearlp":
            return near_lp_family(float(parts[1]), float(parts[2]))
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"malformed norm spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown norm spec {spec!r}")


def _vector(v) -> list[float]:
    if isinstance(v, str):
        try:
            return [float(t) for t in v.split(",") if t.strip() != ""]
        except ValueError as exc:
            raise ConfigError(f"malformed vector {v!r}") from exc
    if isinstance(v, (list, tuple)):
        return [float(t) for t in v]
    raise ConfigError(f"malformed vector {v!r}")


def _subspace(v) -> list[list[float]]:
    if isinstance(v, str):
        return [_vector(row) for row in v.split(";") if row.strip() != ""]
    if isinstance(v, (list, tuple)):
        return [_vector(row) for row in v]
    raise ConfigError(f"malformed subspace {v!r}")


def _take(cfg: dict, spec: dict) -> dict:
    """Normalise a raw config against {key: (default, caster)}; strict on unknown keys."""
    unknown = set(cfg) - set(spec)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    out = {}
    for key, (default, cast) in spec.items():
        val = cfg.get(key, default)
        if val is _REQUIRED:
            raise ConfigError(f"missing required config key {key!r}")
        out[key] = cast(val) if (cast is not None and val is not None) else val
    return out


_REQUIRED = object()


def run_sip(cfg: dict):
    c = _take(cfg, {
        "norm": (_REQUIRED, None),
        "x": (_REQUIRED, _vector),
        "y": (_REQUIRED, _vector),
    })
    m = parse_norm(c["norm"], dim_hint=len(c["x"]))
    x, y = np.array(c["x"]), np.array(c["y"])
    value = sip_eval(x, y, m)
    c["norm"] = m.config()
    results = {
        "value": value,
        "path": m.evaluation_path(),
        "norm_x": m.norm(x),
        "norm_y": m.norm(y),
    }
    return c, results, True


def run_orth(cfg: dict):
    c = _take(cfg, {
        "norm": (_REQUIRED, None),
        "x": (_REQUIRED, _vector),
        "y": (_REQUIRED, _vector),
        "tol": (1e-7, float),
    })
    m = parse_norm(c["norm"], dim_hint=len(c["x"]))
    x, y = np.array(c["x"]), np.array(c["y"])
    bk = birkhoff_check(x, y, m, tol=c["tol"])
    so = sip_orthogonal(x, y, m, tol=c["tol"])
    c["norm"] = m.config()
    results = {
        "birkhoff": bk,
        "sip_orthogonal": so,
        "sip_value_yx": sip_eval(y, x, m),
        "agree": bk == so,
    }
    return c, results, bool(bk == so)


def run_project(cfg: dict):
    c = _take(cfg, {
        "norm": (_REQUIRED, None),
        "x": (_REQUIRED, _vector),
        "subspace": (_REQUIRED, _subspace),
        "tol": (1e-9, float),
    })
    m = parse_norm(c["norm"], dim_hint=len(c["x"]))
    Y = SubspaceBasis(tuple(np.array(v) for v in c["subspace"]), m)
    dec = orthogonal_decompose(np.array(c["x"]), Y, tol=c["tol"])
    c["norm"] = m.config()
    results = {
        "best_approximation": dec.y.tolist(),
        "orthogonal_part": dec.z.tolist(),
        "distance": m.norm(dec.z),
        "residual_orth": dec.residual_orth,
    }
    return c, results, dec.residual_orth <= c["tol"]


def run_quotient(cfg: dict):
    c = _take(cfg, {
        "norm": (_REQUIRED, None),
        "x": (_REQUIRED, _vector),
        "y": (None, _vector),
        "subspace": (_REQUIRED, _subspace),
        "tol": (1e-10, float),
    })
    m = parse_norm(c["norm"], dim_hint=len(c["x"]))
    Y = SubspaceBasis(tuple(np.array(v) for v in c["subspace"]), m)
    Q = QuotientSpace(m, Y)
    x = np.array(c["x"])
    results = {
        "quotient_norm_x": quotient_norm(x, Q, tol=c["tol"]),
        "section_x": section_map(x, Q, tol=c["tol"]).tolist(),
    }
    if c["y"] is not None:
        y = np.array(c["y"])
        results["quotient_norm_y"] = quotient_norm(y, Q, tol=c["tol"])
        results["quotient_sip_xy"] = quotient_sip(x, y, Q, tol=c["tol"])
    c["norm"] = m.config()
    return c, results, True


def run_counterexample(cfg: dict):
    c = _take(cfg, {
        "norm": ("default", None),
        "p": (3.0, float),
        "seed": (42, int),
        "dirs": (10_000, int),
        "threshold": (1e-2, float),
        "probe_pairs": (64, int),
        "pairs": (1000, int),
        "tol": (1e-6, float),
    })
    m = parse_norm(c["norm"])
    c["norm"] = m.config()
    try:
        inst = build_instance(
            m, p=c["p"], seed=c["seed"], n_dirs=c["dirs"],
            threshold=c["threshold"], probe_pairs=c["probe_pairs"],
        )
    except NoNonlinearComplementError as exc:
        results = {
            "found": False,
            "error": str(exc),
            "best_residual": exc.best_residual,
            "threshold": exc.threshold,
        }
        return c, results, False
    preservation, nonlinearity = certify_h(inst, n_pairs=c["pairs"], seed=c["seed"], tol=c["tol"])
    complement = inst.complement_certificate
    passed = (
        complement.max_residual >= c["threshold"]
        and preservation.max_residual <= c["tol"]
        and nonlinearity.violation_norm >= c["threshold"]
    )
    results = {
        "found": True,
        "instance": inst.config(),
        "complement_certificate": complement.to_doc(),
        "preservation": preservation.to_doc(),
        "nonlinearity": nonlinearity.to_doc(),
    }
    return c, results, passed


def _verify_axioms(c):
    m = parse_norm(c["norm"])
    c["norm"] = m.config()
    rep = axioms_check(m, n_samples=c["samples"], seed=c["seed"], tol=c["tol"])
    return rep.to_doc(), rep.passed


def _verify_hanner(c):
    ps = c["p"] if isinstance(c["p"], list) else [c["p"]]
    suites = [hanner_suite(float(p), n_pairs=c["samples"], dim=c["dim"], seed=c["seed"], tol=c["tol"])
              for p in ps]
    return {"suites": suites}, all(s["passed"] for s in suites)


def _verify_isometry(c):
    m = parse_norm(c["norm"])
    c["norm"] = m.config()
    checks = []
    I = np.eye(m.dim)
    checks.append(("identity", isometry_invariance_check(I, m, m, c["samples"], c["seed"], c["tol"])))
    flips = np.diag([(-1.0) ** i for i in range(m.dim)])
    checks.append(("sign_flips", isometry_invariance_check(flips, m, m, c["samples"], c["seed"], c["tol"])))
    if isinstance(m, LpNorm):
        perm = np.zeros((m.dim, m.dim))
        for i in range(m.dim):
            perm[i, (i + 1) % m.dim] = -1.0 if i == 0 else 1.0
        checks.append(("signed_permutation",
                       isometry_invariance_check(perm, m, m, c["samples"], c["seed"], c["tol"])))
        if m.p == 2.0 and m.dim >= 2:
            th = 0.83
            rot = np.eye(m.dim)
            rot[0, 0] = rot[1, 1] = np.cos(th)
            rot[0, 1], rot[1, 0] = -np.sin(th), np.sin(th)
            checks.append(("rotation", isometry_invariance_check(rot, m, m, c["samples"], c["seed"], c["tol"])))
    results = {"checks": [{"name": n, **r} for n, r in checks]}
    return results, all(r["passed"] for _, r in checks)


def _verify_lp_sl(c):
    rep = lp_sl_coordinate_case(
        n=c["dim"], p=float(c["p"]), coords=c["coords"],
        seed=c["seed"], tol=c["tol"], n_samples=c["samples"],
    )
    return rep, rep["passed"]


def _verify_sl_probe(c):
    m = parse_norm(c["norm"])
    c["norm"] = m.config()
    rep = finite_dim_sl_probe(m, n_attempts=c["samples"], seed=c["seed"], tol=c["tol"])
    return rep, rep["passed"]


def _verify_thm2(c):
    m = parse_norm(c["norm"])
    c["norm"] = m.config()
    try:
        inst = build_instance(m, p=float(c["p"]), seed=c["seed"], n_dirs=c["dirs"],
                              threshold=c["threshold"])
    except NoNonlinearComplementError as exc:
        return {"error": str(exc)}, False
    model, h_flat, sampler = finite_section(inst, 3, 3)
    positive = thm2_forward_harness(h_flat, model, n_probe=c["samples"], seed=c["seed"],
                                    tol=c["tol"], domain_sampler=sampler)
    control_model = LpNorm(3.0, 3)
    negative = thm2_forward_harness(sign_scramble, control_model, n_probe=c["samples"],
                                    seed=c["seed"], tol=c["tol"])
    neg_fails = (not negative["passed"]) and negative.get("membership_max", 0.0) >= c["threshold"]
    results = {"shift_map": positive, "negative_control": negative}
    return results, bool(positive["passed"] and neg_fails)


def _verify_section(c):
    m = parse_norm(c["norm"])
    c["norm"] = m.config()
    Y = SubspaceBasis(tuple(np.array(v) for v in c["subspace"]), m)
    cert = verify_section_sip(QuotientSpace(m, Y), n_pairs=c["samples"], seed=c["seed"], tol=c["tol"])
    return cert.to_doc(), bool(cert.no_violation)


_SUITES = {
    "axioms": (_verify_axioms, {"norm": (_REQUIRED, None), "samples": (1000, int),
                                "seed": (0, int), "tol": (1e-6, float)}),
    "hanner": (_verify_hanner, {"p": ([1.5, 2.0, 3.0, 4.0], None), "samples": (10_000, int),
                                "dim": (6, int), "seed": (0, int), "tol": (1e-12, float)}),
    "isometry": (_verify_isometry, {"norm": ("lp:3:3", None), "samples": (200, int),
                                    "seed": (0, int), "tol": (1e-9, float)}),
    "lp-sl": (_verify_lp_sl, {"dim": (6, int), "p": (3.0, None), "coords": ([0], None),
                              "samples": (25, int), "seed": (0, int), "tol": (1e-9, float)}),
    "sl-probe": (_verify_sl_probe, {"norm": ("lp:3:4", None), "samples": (8, int),
                                    "seed": (0, int), "tol": (1e-9, float)}),
    "thm2": (_verify_thm2, {"norm": ("default", None), "p": (3.0, None), "dirs": (4000, int),
                            "samples": (48, int), "seed": (42, int), "tol": (1e-6, float),
                            "threshold": (1e-2, float)}),
    "section": (_verify_section, {"norm": ("default", None), "subspace": ("1,0,0", _subspace),
                                  "samples": (100, int), "seed": (0, int), "tol": (1e-7, float)}),
}


def run_verify(cfg: dict):
    suite = cfg.get("suite")
    if suite not in _SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {sorted(_SUITES)}")
    fn, spec = _SUITES[suite]
    c = _take({k: v for k, v in cfg.items() if k != "suite"}, spec)
    results, passed = fn(c)
    c["suite"] = suite
    return c, results, passed


def run_replay(cfg: dict):
    c = _take(cfg, {"file": (_REQUIRED, str), "rtol": (None, float)})
    try:
        with open(c["file"]) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read report {c['file']!r}: {exc}") from exc
    if doc.get("schema") != reports.SCHEMA:
        raise ConfigError(f"unsupported schema {doc.get('schema')!r}")
    command = doc.get("command")
    if command not in _RUNNERS or command == "replay":
        raise ConfigError(f"cannot replay command {command!r}")
    _, fresh_results, fresh_passed = _RUNNERS[command](dict(doc.get("config", {})))
    diffs = reports.compare_results(doc.get("results"), fresh_results, rtol=c["rtol"])
    results = {
        "file": c["file"],
        "command": command,
        "match": not diffs,
        "differences": diffs[:50],
        "replayed_passed": fresh_passed,
    }
    return c, results, bool(not diffs and fresh_passed)


_RUNNERS = {
    "sip": run_sip,
    "orth": run_orth,
    "project": run_project,
    "quotient": run_quotient,
    "counterexample": run_counterexample,
    "verify": run_verify,
    "replay": run_replay,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_output_flags(sp):
    sp.add_argument("--out", help="write the report to this path (default: stdout)")
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    sp.add_argument("--config", help="JSON file with the same keys as the flags")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="siplab", description="semi-inner-product laboratory for smooth normed spaces")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("sip", help="evaluate the semi-inner product [x|y]")
    sp.add_argument("--norm", help="default | lp:p[:dim] | mixed:p:size,q;... | nearlp:p:eps")
    sp.add_argument("--x")
    sp.add_argument("--y")
    _add_output_flags(sp)

    sp = sub.add_parser("orth", help="Birkhoff and pairing orthogonality of (x, y)")
    for flag in ("--norm", "--x", "--y", "--tol"):
        sp.add_argument(flag)
    _add_output_flags(sp)

    sp = sub.add_parser("project", help="best approximation of x in a subspace")
    for flag in ("--norm", "--x", "--subspace", "--tol"):
        sp.add_argument(flag)
    _add_output_flags(sp)

    sp = sub.add_parser("quotient", help="quotient norm / pairing through representatives")
    for flag in ("--norm", "--x", "--y", "--subspace", "--tol"):
        sp.add_argument(flag)
    _add_output_flags(sp)

    sp = sub.add_parser("counterexample", help="build and certify the non-linear preserving map")
    sp.add_argument("--norm")
    sp.add_argument("--p")
    sp.add_argument("--seed")
    sp.add_argument("--dirs")
    sp.add_argument("--threshold")
    sp.add_argument("--probe-pairs", dest="probe_pairs")
    sp.add_argument("--pairs")
    sp.add_argument("--tol")
    _add_output_flags(sp)

    sp = sub.add_parser("verify", help="run a cross-cutting verification suite")
    sp.add_argument("--suite", required=True, choices=sorted(_SUITES))
    sp.add_argument("--norm")
    sp.add_argument("--p")
    sp.add_argument("--dim")
    sp.add_argument("--coords")
    sp.add_argument("--subspace")
    sp.add_argument("--samples")
    sp.add_argument("--seed")
    sp.add_argument("--dirs")
    sp.add_argument("--threshold")
    sp.add_argument("--tol")
    _add_output_flags(sp)

    sp = sub.add_parser("replay", help="re-verify a stored report")
    sp.add_argument("file")
    sp.add_argument("--rtol", help="float comparison tolerance for cross-implementation replay")
    _add_output_flags(sp)

    return p


_FLAG_CASTS = {
    "p": lambda s: json.loads(s) if isinstance(s, str) and s.strip().startswith("[") else float(s),
    "seed": int,
    "samples": int,
    "dirs": int,
    "pairs": int,
    "probe_pairs": int,
    "dim": int,
    "tol": float,
    "threshold": float,
    "rtol": float,
    "coords": lambda s: [int(t) for t in str(s).split(",") if t.strip() != ""],
}


def _assemble_config(args: argparse.Namespace) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config!r}: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg.update(file_cfg)
    skip = {"command", "out", "format", "config"}
    for key, val in vars(args).items():
        if key in skip or val is None:
            continue
        cast = _FLAG_CASTS.get(key)
        try:
            cfg[key] = cast(val) if cast and isinstance(val, str) else val
        except (ValueError, json.JSONDecodeError) as exc:
            raise ConfigError(f"malformed value for --{key.replace('_', '-')}: {val!r}") from exc
    return cfg


def cli_main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _assemble_config(args)
        with reports.Timer() as timer:
            norm_cfg, results, passed = _RUNNERS[args.command](cfg)
        doc = reports.make_report(args.command, norm_cfg, results, runtime_s=timer.seconds)
        reports.write_report(doc, getattr(args, "out", None), getattr(args, "format", "json"))
        return EXIT_OK if passed else EXIT_VERIFY
    except ConfigError as exc:
        print(f"siplab: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"siplab: verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except SiplabError as exc:
        print(f"siplab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
