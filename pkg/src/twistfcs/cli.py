"""Command line: ``twistfcs {fcs,spectrum,verify}``.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 pipeline error (genericity, linking, TQ). Errors are written to stderr as
one JSON record.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from typing import Sequence

from . import bethe, oracle
from .config import BRANCHES, FORMATS, MODES, SIDES, RunConfig, config_from_text, load_config, parse_complex, parse_ell_range
from .errors import ConfigError, TwistFCSError
from .formfactor import FcsTable, fcs_sum
from .twist import solve_rho_link, tilde_twist
from .verify import run_groups

CSV_HEADER = ["ell", "re", "im", "oracle_re", "oracle_im", "abs_err", "rel_err"]

log = logging.getLogger("twistfcs")


def _complex_list(text: str, n: int, name: str) -> tuple:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != n:
        raise ConfigError(f"expected {n} comma-separated values", field=name)
    return tuple(parse_complex(p.strip(), name) for p in parts)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twistfcs", description="FCS of the twisted XXX chain via form-factor sums")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("fcs", "FCS table for the requested ell values"),
        ("spectrum", "Bethe rapidities of every eigenstate"),
        ("verify", "run every invariant group and report pass/fail"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--length", type=int, help="number of sites L")
        p.add_argument("--twist", help="k1,k2,kp,km (complex entries like 1+2j)")
        p.add_argument("--beta", help="bx,by,bz")
        p.add_argument("--ell", help="inclusive range a..b")
        p.add_argument("--state", type=int, help="index into the energy-sorted states")
        p.add_argument("--branch", choices=BRANCHES)
        p.add_argument("--mode", choices=MODES)
        p.add_argument("--format", dest="fmt", choices=FORMATS)
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--tol", type=float, help="override every verification threshold")
        p.add_argument("--side", choices=SIDES, help="spectrum of K or of K~")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def config_from_args(args) -> RunConfig:
    over = {
        "L": args.length,
        "twist": _complex_list(args.twist, 4, "twist") if args.twist else None,
        "beta": _complex_list(args.beta, 3, "beta") if args.beta else None,
        "ells": parse_ell_range(args.ell) if args.ell else None,
        "state_index": args.state,
        "branch": args.branch,
        "mode": args.mode,
        "fmt": args.fmt,
        "output": args.out,
        "tolerance": args.tol,
        "side": args.side,
    }
    if args.config:
        return load_config(args.config, **over)
    return config_from_text("", **over)


def _pair(z):
    return None if z is None else [z.real, z.imag]


def table_record(table: FcsTable, branch: int | None) -> dict:
    rows = []
    for ell, v, o, ae, re_ in table.rows():
        rows.append({"ell": ell, "value": _pair(v), "oracle": _pair(o), "abs_err": ae, "rel_err": re_})
    meta = {k: v for k, v in table.meta.items() if k != "seconds"}
    return {"branch": branch, "rows": rows, "meta": meta}


def table_csv(table: FcsTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    fmt = lambda x: "" if x is None else repr(float(x))
    for ell, v, o, ae, re_ in table.rows():
        w.writerow(
            [ell, fmt(v.real), fmt(v.imag), fmt(None if o is None else o.real), fmt(None if o is None else o.imag), fmt(ae), fmt(re_)]
        )
    return buf.getvalue()


def read_csv_table(text: str) -> list[dict]:
    """Parse a table written by :func:`table_csv` (``#`` lines are skipped)."""
    body = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    out = []
    for row in csv.DictReader(body):
        if row["ell"] == "ell":
            continue
        num = lambda k: float(row[k]) if row[k] != "" else None
        out.append({"ell": int(row["ell"]), **{k: num(k) for k in CSV_HEADER[1:]}})
    return out


def oracle_table(rc: RunConfig) -> FcsTable:
    values = oracle.fcs_direct_values(rc.twist_obj, rc.beta, rc.ell_list, rc.state_index, rc.chain)
    return FcsTable(rc.ell_list, values, None, {"mode": "oracle"})


def run_fcs(rc: RunConfig) -> str:
    if rc.mode == "oracle":
        tables = {None: oracle_table(rc)}
    else:
        tables = {}
        for br in rc.branches:
            tables[br] = fcs_sum(rc.twist_obj, rc.spec, rc.state_index, rc.chain, rc.ell_list, br, rc.mode == "verify")
            log.info("branch %d: %.2fs", br, tables[br].meta["seconds"])
    deviation = None
    if len(tables) == 2:
        a, b = tables[0].values, tables[1].values
        deviation = max(abs(x - y) / max(abs(y), 1e-300) for x, y in zip(a, b))
    if rc.fmt == "json":
        doc = {"config": rc.echo(), "tables": [table_record(t, br) for br, t in tables.items()]}
        if deviation is not None:
            doc["max_branch_deviation"] = deviation
        return json.dumps(doc, indent=2) + "\n"
    if len(tables) == 1:
        return table_csv(next(iter(tables.values())))
    parts = []
    for br, t in tables.items():
        parts.append(f"# branch={br}\n" + table_csv(t))
    parts.append(f"# max_branch_deviation={deviation!r}\n")
    return "".join(parts)


def spectrum_records(rc: RunConfig) -> list[dict]:
    twist = rc.twist_obj
    twist_t = tilde_twist(twist, rc.spec)
    rho = solve_rho_link(twist, twist_t)[rc.branches[0]]
    tw, mt = (twist, rho.side(twist)) if rc.side == "K" else (twist_t, rho.side(twist_t, True))
    return [ln.record() for ln in bethe.enumerate_spectrum(tw, mt, rc.chain)]


def run_spectrum(rc: RunConfig) -> str:
    records = spectrum_records(rc)
    if rc.fmt == "json":
        return json.dumps({"config": rc.echo(), "lines": records}, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["eigen_index", "class", "residual", "tq_residual", "roots", "lambda_poly", "q_poly"])
    for r in records:
        w.writerow(
            [r["eigen_index"], r["class"], repr(r["residual"]), repr(r["tq_residual"]), json.dumps(r["roots"]), json.dumps(r["lambda_poly"]), json.dumps(r["q_poly"])]
        )
    return buf.getvalue()


def run_verify(rc: RunConfig) -> tuple[str, bool]:
    groups = run_groups(rc)
    ok = all(g.passed for g in groups)
    if rc.fmt == "json":
        text = json.dumps({"config": rc.echo(), "passed": ok, "groups": [g.record() for g in groups]}, indent=2) + "\n"
    else:
        lines = []
        for g in groups:
            lines.append(f"[{'PASS' if g.passed else 'FAIL'}] {g.name}")
            for c in g.checks:
                lines.append(f"    {'ok ' if c.passed else 'BAD'} {c.name}: {c.measured:.3e} (threshold {c.threshold:.1e})")
            for k, v in g.info.items():
                lines.append(f"    {k}: {v}")
            if g.error:
                lines.append(f"    error: {g.error}")
        lines.append("ALL PASS" if ok else "FAILURES PRESENT")
        text = "\n".join(lines) + "\n"
    return text, ok


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        rc = config_from_args(args)
        if args.command == "fcs":
            _emit(run_fcs(rc), rc.output)
            return 0
        if args.command == "spectrum":
            _emit(run_spectrum(rc), rc.output)
            return 0
        text, ok = run_verify(rc)
        _emit(text, rc.output)
        return 0 if ok else 1
    except ConfigError as exc:
        sys.stderr.write(json.dumps(exc.record()) + "\n")
        return 2
    except TwistFCSError as exc:
        sys.stderr.write(json.dumps(exc.record()) + "\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
