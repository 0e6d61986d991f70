"""Command-line verification harness.

Subcommands: adm, perm, compare-adm-perm, count, enumerate,
verify strata|torsor|symplectic|matrix, run-suite.

Exit codes: 0 pass, 1 verification failure, 2 usage error, 3 budget
exceeded.  The report schema is
{case, params, rows:[{w:{word, omega, translation, finite}, length,
predicted, observed, source}], totals, pass, elapsed_ms}; CSV mirrors
the rows, text is a human-readable table.  Output is deterministic for
fixed inputs except for the elapsed_ms field.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time

from .errors import ArtifactError, BudgetExceeded, ManifestParseError
from .weyl import Coweight, ParahoricSpec, RootDatum, length, reduced_word, translation
from .admissible import adm_set, perm_set, stratum_count, total_count
from . import latmod, matschemes


# ---------------------------------------------------------------------------
# parameter plumbing


def _ints(text):
    try:
        return tuple(int(x) for x in str(text).split(","))
    except ValueError:
        raise ValueError(f"expected comma-separated integers, got {text!r}")


def _datum(params) -> RootDatum:
    group = params.get("group", "gl").lower()
    if group == "gl":
        return RootDatum("GL", int(params["d"]))
    if group == "gsp":
        return RootDatum("GSp", int(params["g"]))
    raise ValueError(f"unknown group {params['group']!r}")


def _spec(datum, params) -> ParahoricSpec:
    if params.get("iwahori"):
        return ParahoricSpec(datum, frozenset(datum.vertex_labels))
    if params.get("I") is None:
        raise ValueError("need --I or --iwahori")
    return ParahoricSpec(datum, frozenset(_ints(params["I"])))


def _model(params, budget):
    datum = _datum(params)
    kind = datum.kind
    e = int(params["e"])
    I = set(datum.vertex_labels) if params.get("iwahori") else set(_ints(params["I"]))
    p = int(params["p"])
    r_vec = _ints(params["r"]) if params.get("r") is not None else None
    return latmod.build_model(kind, datum.n, e, I, p, r_vec)


def _mu_from_model(model) -> Coweight:
    """The coweight whose admissible set stratifies the model: the sum
    of the minuscule coweights omega_{r_l} for GL, e * mu_1 for GSp."""
    datum = RootDatum(model.kind, model.n)
    if model.kind == "GL":
        mu = [0] * model.n
        for r in model.r_vec:
            for i in range(r):
                mu[i] += 1
        return Coweight(datum, tuple(mu))
    return Coweight(datum, (model.e,) * model.n + (model.e,))


def _cycle_notation(w) -> str:
    """One-line cycle notation of the finite part (signed for GSp)."""
    datum = w.datum
    if datum.kind == "GL":
        imgs = {i + 1: w.u[i] + 1 for i in range(datum.n)}
    else:
        imgs = {}
        for j in range(1, datum.n + 1):
            imgs[j] = datum._apply_signed(w.u, j)
            imgs[-j] = -imgs[j]
    cycles = []
    seen = set()
    for start in sorted(imgs, key=lambda x: (abs(x), x < 0)):
        if start in seen or imgs[start] == start:
            continue
        cyc = [start]
        seen.add(start)
        nxt = imgs[start]
        while nxt != start:
            cyc.append(nxt)
            seen.add(nxt)
            nxt = imgs[nxt]
        cycles.append("(" + " ".join(str(x) for x in cyc) + ")")
    return "".join(cycles) or "()"


def _serialize_element(w):
    word, om = reduced_word(w)
    return {
        "word": list(word),
        "omega": om,
        "translation": ",".join(str(x) for x in w.lam),
        "finite": _cycle_notation(w),
    }


def _class_row(c, predicted=None, observed=None, source=None):
    w = c.min_rep
    return {
        "w": _serialize_element(w),
        "length": length(w),
        "predicted": predicted,
        "observed": observed,
        "source": source,
    }


def _class_sort_key(c):
    return (length(c.min_rep), c.min_rep.lam, c.min_rep.u)


# ---------------------------------------------------------------------------
# case runners


def _report(case, params, rows, totals, passed, t0):
    return {
        "case": case,
        "params": {k: v for k, v in sorted(params.items()) if v is not None},
        "rows": rows,
        "totals": totals,
        "pass": bool(passed),
        "elapsed_ms": int((time.monotonic() - t0) * 1000),
    }


def run_adm(params, budget=None, jobs=1):
    t0 = time.monotonic()
    datum = _datum(params)
    spec = _spec(datum, params)
    mu = Coweight(datum, _ints(params["mu"]))
    s = adm_set(spec, mu)
    rows = [
        _class_row(c, source="admissible.adm_set")
        for c in sorted(s.classes, key=_class_sort_key)
    ]
    return _report("adm", params, rows, {"predicted": None, "observed": len(rows)}, True, t0)


def run_perm(params, budget=None, jobs=1):
    t0 = time.monotonic()
    datum = _datum(params)
    spec = _spec(datum, params)
    mu = Coweight(datum, _ints(params["mu"]))
    s = perm_set(spec, mu)
    rows = [
        _class_row(c, source="admissible.perm_set")
        for c in sorted(s.classes, key=_class_sort_key)
    ]
    return _report("perm", params, rows, {"predicted": None, "observed": len(rows)}, True, t0)


def run_compare(params, budget=None, jobs=1):
    t0 = time.monotonic()
    datum = _datum(params)
    spec = _spec(datum, params)
    mu = Coweight(datum, _ints(params["mu"]))
    a = adm_set(spec, mu).classes
    b = perm_set(spec, mu).classes
    rows = [
        _class_row(
            c,
            predicted=int(c in a),
            observed=int(c in b),
            source="admissible.adm_set/perm_set",
        )
        for c in sorted(a | b, key=_class_sort_key)
    ]
    totals = {"predicted": len(a), "observed": len(b)}
    return _report("compare-adm-perm", params, rows, totals, a == b, t0)


def run_count(params, budget=None, jobs=1):
    t0 = time.monotonic()
    datum = _datum(params)
    spec = _spec(datum, params)
    mu = Coweight(datum, _ints(params["mu"]))
    q = int(params["p"])
    s = adm_set(spec, mu)
    rows = []
    for c in sorted(s.classes, key=_class_sort_key):
        n = stratum_count(c, q)
        rows.append(_class_row(c, predicted=n, observed=n, source="admissible.stratum_count"))
    tot = total_count(s, q)
    return _report("count", params, rows, {"predicted": tot, "observed": tot}, True, t0)


def _subspace_dump(sub):
    return [[int(x) for x in row] for row in sub.basis]


def run_enumerate(params, budget=None, jobs=1):
    t0 = time.monotonic()
    model = _model(params, budget)
    what = params.get("points", "naive")
    rows = []
    if what == "naive":
        pts = latmod.naive_points(model, budget=budget, jobs=jobs)
        src = "latmod.naive_points"
    elif what == "canonical":
        pts = latmod.canonical_points(model, budget=budget, jobs=jobs)
        src = "latmod.canonical_points"
    elif what == "splitting":
        pts = latmod.splitting_points(model, budget=budget)
        src = "latmod.splitting_points"
    elif what == "unramified":
        pts = latmod.unramified_points(model, int(params["l"]), budget=budget)
        src = "latmod.unramified_points"
    else:
        raise ValueError(f"unknown point kind {what!r}")
    for pt in pts:
        if what == "splitting":
            dump = {str(t): [_subspace_dump(f) for f in fs] for t, fs in pt.flags.items()}
        else:
            dump = {str(t): _subspace_dump(s) for t, s in pt.subspaces.items()}
        rows.append({"point": dump, "source": src})
    totals = {"predicted": None, "observed": len(rows)}
    return _report(f"enumerate-{what}", params, rows, totals, True, t0)


def run_verify_strata(params, budget=None, jobs=1):
    t0 = time.monotonic()
    model = _model(params, budget)
    q = model.field.p
    mu = _mu_from_model(model)
    datum = mu.datum
    spec = ParahoricSpec(datum, frozenset(model.I))
    s = adm_set(spec, mu)
    naive = list(latmod.naive_points(model, budget=budget, jobs=jobs))
    canonical = [pt for pt in naive if latmod.has_splitting_flag(pt, budget=budget)]
    rep = latmod.classify_strata(canonical, s, model)
    observed = dict(rep.rows)
    rows = []
    ok = rep.unmatched == 0
    for c in sorted(s.classes, key=_class_sort_key):
        pred = stratum_count(c, q)
        obs = observed.get(c, 0)
        ok = ok and pred == obs
        rows.append(_class_row(c, predicted=pred, observed=obs, source="latmod.classify_strata"))
    totals = {
        "predicted": total_count(s, q),
        "observed": len(canonical),
        "naive": len(naive),
        "canonical": len(canonical),
        "unmatched": rep.unmatched,
    }
    return _report("verify-strata", params, rows, totals, ok, t0)


def run_verify_torsor(params, budget=None, jobs=1):
    t0 = time.monotonic()
    model = _model(params, budget)
    rep = latmod.torsor_check(model, budget=budget)
    rows = [
        {
            "w": None,
            "length": None,
            "predicted": None,
            "observed": f,
            "source": f"latmod.unramified_points(l={l})",
        }
        for l, f in enumerate(rep.unramified_factors, start=1)
    ]
    prod = 1
    for f in rep.unramified_factors:
        prod *= f
    totals = {"predicted": prod, "observed": rep.splitting_total}
    return _report("verify-torsor", params, rows, totals, rep.passed, t0)


def run_verify_symplectic(params, budget=None, jobs=1):
    t0 = time.monotonic()
    params = dict(params)
    params["group"] = "gsp"
    model = _model(params, budget)
    q = model.field.p
    mu = _mu_from_model(model)
    spec = ParahoricSpec(mu.datum, frozenset(model.I))
    s = adm_set(spec, mu)
    canonical = list(latmod.canonical_points(model, budget=budget, jobs=jobs))
    rep = latmod.classify_strata(canonical, s, model)
    observed = dict(rep.rows)
    ok = rep.unmatched == 0 and len(s.maximal_classes()) == 1
    rows = []
    for c in sorted(s.classes, key=_class_sort_key):
        pred = stratum_count(c, q)
        obs = observed.get(c, 0)
        ok = ok and pred == obs
        rows.append(_class_row(c, predicted=pred, observed=obs, source="latmod.classify_strata"))
    totals = {
        "predicted": total_count(s, q),
        "observed": len(canonical),
        "unmatched": rep.unmatched,
        "maximal_classes": len(s.maximal_classes()),
    }
    return _report("verify-symplectic", params, rows, totals, ok, t0)


def run_verify_matrix(params, budget=None, jobs=1):
    t0 = time.monotonic()
    p = int(params["p"])
    if params.get("n") is not None:
        n, r, s = int(params["n"]), int(params["r"]), int(params["s"])
        direct = matschemes.unitary_points_direct(n, r, s, p)
        strat = matschemes.unitary_points_stratified(n, r, s, p)
        by_rank = dict(direct.by_rank)
        rows = [
            {
                "w": None,
                "length": k,
                "predicted": cnt,
                "observed": by_rank.get(k, 0),
                "source": "matschemes.unitary_points_direct/stratified",
            }
            for k, cnt in strat.by_rank
        ]
        totals = {"predicted": strat.total, "observed": direct.total}
        passed = direct.total == strat.total and direct.by_rank == strat.by_rank
        return _report("verify-matrix-unitary", params, rows, totals, passed, t0)
    g, e = int(params["g"]), int(params["e"])
    direct = matschemes.symplectic_P_points(g, e, p, "direct")
    linear = matschemes.symplectic_P_points(g, e, p, "linear")
    rows = [
        {
            "w": None,
            "length": None,
            "predicted": linear,
            "observed": direct,
            "source": "matschemes.symplectic_P_points",
        }
    ]
    totals = {"predicted": linear, "observed": direct}
    return _report("verify-matrix-symplectic", params, rows, totals, direct == linear, t0)


_RUNNERS = {
    "adm": run_adm,
    "perm": run_perm,
    "compare-adm-perm": run_compare,
    "count": run_count,
    "enumerate": run_enumerate,
    "verify-strata": run_verify_strata,
    "verify-torsor": run_verify_torsor,
    "verify-symplectic": run_verify_symplectic,
    "verify-matrix": run_verify_matrix,
}


# ---------------------------------------------------------------------------
# manifest suites


def parse_manifest(text):
    """Line-oriented key=value blocks separated by blank lines."""
    cases = []
    block = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            if not line and block:
                cases.append(block)
                block = {}
            continue
        if "=" not in line:
            raise ManifestParseError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key:
            raise ManifestParseError(f"line {lineno}: empty key")
        block[key] = value
    if block:
        cases.append(block)
    for i, c in enumerate(cases):
        if "case" not in c:
            raise ManifestParseError(f"block {i + 1}: missing 'case' key")
        if c["case"] not in _RUNNERS:
            raise ManifestParseError(f"block {i + 1}: unknown case {c['case']!r}")
    return cases


def run_suite(manifest_path, budget=None, jobs=1, out_dir=None):
    with open(manifest_path) as fh:
        cases = parse_manifest(fh.read())
    reports = []
    ok = True
    for i, block in enumerate(cases):
        params = {k: v for k, v in block.items() if k != "case" and not k.startswith("expect_")}
        if "iwahori" in params:
            params["iwahori"] = params["iwahori"].lower() in ("1", "true", "yes")
        report = _RUNNERS[block["case"]](params, budget=budget, jobs=jobs)
        for key, value in block.items():
            if key.startswith("expect_"):
                field = key[len("expect_"):]
                expected = int(value)
                got = report["totals"].get(field)
                if got != expected:
                    report["pass"] = False
                    report["totals"][f"expected_{field}"] = expected
        ok = ok and report["pass"]
        reports.append(report)
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
            with open(os.path.join(out_dir, f"case_{i:03d}.csv"), "w", newline="") as fh:
                fh.write(format_csv(report))
    return {"cases": reports, "pass": ok}


# ---------------------------------------------------------------------------
# output formatting


_CSV_FIELDS = ["word", "omega", "translation", "finite", "length", "predicted", "observed", "source"]


def format_csv(report):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_FIELDS)
    for row in report["rows"]:
        w = row.get("w") or {}
        writer.writerow(
            [
                " ".join(str(x) for x in w.get("word", [])),
                w.get("omega", ""),
                w.get("translation", ""),
                w.get("finite", ""),
                row.get("length", ""),
                row.get("predicted", ""),
                row.get("observed", ""),
                row.get("source", ""),
            ]
        )
    writer.writerow([])
    writer.writerow(["totals", "", "", "", "", report["totals"].get("predicted", ""),
                     report["totals"].get("observed", ""), "PASS" if report["pass"] else "FAIL"])
    return buf.getvalue()


def format_text(report):
    lines = [f"case: {report['case']}"]
    for k, v in report["params"].items():
        lines.append(f"  {k} = {v}")
    for row in report["rows"]:
        w = row.get("w")
        label = (
            f"t_({w['translation']}) {w['finite']} tau^{w['omega']}" if w else row.get("source", "")
        )
        lines.append(
            f"  {label:40s} len={row.get('length')} predicted={row.get('predicted')} observed={row.get('observed')}"
        )
    totals = " ".join(f"{k}={v}" for k, v in report["totals"].items())
    lines.append(f"totals: {totals}")
    lines.append("PASS" if report["pass"] else "FAIL")
    return "\n".join(lines) + "\n"


def emit(report, fmt, stream):
    if fmt == "json":
        stream.write(json.dumps(report, indent=2) + "\n")
    elif fmt == "csv":
        stream.write(format_csv(report))
    else:
        stream.write(format_text(report))


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"usage error: {message}\n")


def _add_common(sp, model=False, mu=False, need_p=False):
    sp.add_argument("--group", default="gl", choices=["gl", "gsp"])
    sp.add_argument("--d", type=int)
    sp.add_argument("--g", type=int)
    sp.add_argument("--I")
    sp.add_argument("--iwahori", action="store_true")
    sp.add_argument("--format", default="text", choices=["json", "csv", "text"])
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--budget", type=int)
    if model:
        sp.add_argument("--e", type=int, required=True)
        sp.add_argument("--r")
    if mu:
        sp.add_argument("--mu", required=True)
    if need_p:
        sp.add_argument("--p", type=int, required=True)


def build_parser():
    parser = _Parser(prog="locmodel", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("adm", "perm", "compare-adm-perm"):
        sp = sub.add_parser(name)
        _add_common(sp, mu=True)
    sp = sub.add_parser("count")
    _add_common(sp, mu=True, need_p=True)
    sp = sub.add_parser("enumerate")
    sp.add_argument("points", choices=["naive", "splitting", "canonical", "unramified"])
    _add_common(sp, model=True, need_p=True)
    sp.add_argument("--l", type=int)

    vp = sub.add_parser("verify")
    vsub = vp.add_subparsers(dest="verify_what", required=True)
    sp = vsub.add_parser("strata")
    _add_common(sp, model=True, need_p=True)
    sp = vsub.add_parser("torsor")
    _add_common(sp, model=True, need_p=True)
    sp = vsub.add_parser("symplectic")
    _add_common(sp, model=True, need_p=True)
    sp = vsub.add_parser("matrix")
    _add_common(sp, need_p=True)
    sp.add_argument("--n", type=int)
    sp.add_argument("--r", type=int)
    sp.add_argument("--s", type=int)
    sp.add_argument("--e", type=int)

    sp = sub.add_parser("run-suite")
    sp.add_argument("manifest")
    sp.add_argument("--out")
    sp.add_argument("--format", default="json", choices=["json", "csv", "text"])
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--budget", type=int)
    return parser


def main(argv=None, stream=None):
    stream = stream or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    budget = args.budget if getattr(args, "budget", None) else None
    if budget is None and os.environ.get("LOCMODEL_BUDGET"):
        try:
            budget = int(os.environ["LOCMODEL_BUDGET"])
        except ValueError:
            print("usage error: LOCMODEL_BUDGET must be an integer", file=sys.stderr)
            return 2
    jobs = getattr(args, "jobs", 1) or 1

    try:
        if args.command == "run-suite":
            aggregate = run_suite(args.manifest, budget=budget, jobs=jobs, out_dir=args.out)
            if args.format == "json":
                stream.write(json.dumps(aggregate, indent=2) + "\n")
            else:
                for rep in aggregate["cases"]:
                    emit(rep, args.format, stream)
            return 0 if aggregate["pass"] else 1

        name = args.command if args.command != "verify" else f"verify-{args.verify_what}"
        params = {
            k: v
            for k, v in vars(args).items()
            if k not in ("command", "verify_what", "format", "jobs", "budget")
        }
        report = _RUNNERS[name](params, budget=budget, jobs=jobs)
        emit(report, args.format, stream)
        return 0 if report["pass"] else 1
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 3
    except ManifestParseError as exc:
        print(f"manifest error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ArtifactError, ValueError, KeyError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
