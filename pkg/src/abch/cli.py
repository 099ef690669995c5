"""Command-line front end.

    abch <command> <path> [--metric m.herm] [--cover c.cover]
         [--backend exact|numeric|both] [--format md|json|csv]
         [--pq P,Q] [--seed N] [--out FILE]

Commands: check, cohomology, spectra, diagram, ddbar, inequality, abc,
cover.  The positional path is a `.cplx` model for every command except
`cover`, which takes a `.cover` file (or `--cover`).  Exit code 0 means all
requested verifications passed, 1 a verification failure, 2 an input error.
Output is byte-identical across runs for a fixed configuration; the sampling
seed defaults to 271828 and `ABCH_TOL_REL` overrides the relative zero
tolerance (default 1e-9).
"""

from __future__ import annotations

import argparse
import sys
from typing import Dict, List, Optional, Tuple

from abch import reporting
from abch.complexes import NotAComplex, build_complex
from abch.covering import (
    build_cover,
    gamma_tables,
    gap_and_closed_image,
    load_cover,
    metric_independence_check,
)
from abch.laplacians import ALL_KINDS, DEFAULT_SEED, LaplacianBundle
from abch.linalg import Mat
from abch.metric import HermitianMetric, identity_metric, load_metric
from abch.model import ModelError, load_model
from abch.scalars import QQi
from abch.setting import ExactSetting, NumericSetting
from abch import cohomology as coh

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_INPUT = 2


def _parse_pq(text: Optional[str], n: int) -> Optional[Tuple[int, int]]:
    if text is None:
        return None
    try:
        p, q = (int(x) for x in text.split(","))
    except ValueError as exc:
        raise ModelError(f"bad --pq value {text!r}") from exc
    if not (0 <= p <= n and 0 <= q <= n):
        raise ModelError(f"--pq {p},{q} outside 0..{n}")
    return (p, q)


def _load_setting(args) -> Tuple[ExactSetting, str]:
    model = load_model(args.path)
    comp = build_complex(model)
    if args.metric:
        mn, H = load_metric(args.metric)
        if mn != comp.n:
            raise ModelError(f"metric dimension {mn} does not match model dimension {comp.n}")
        metric = HermitianMetric(comp.n, H)
    else:
        metric = identity_metric(comp.n)
    return ExactSetting(comp, metric), model.name or args.path


def _emit(args, lines: List[str], payload: dict, failures: List[str]) -> int:
    if args.format == "json":
        payload = dict(payload)
        payload["schema"] = reporting.REPORT_SCHEMA
        payload["failures"] = failures
        text = reporting.render_json(payload)
    elif args.format == "csv":
        text = "\n".join(lines) + "\n"
    else:
        body = list(lines)
        body.append("RESULT: " + ("PASS" if not failures else "FAIL"))
        for f in failures:
            body.append(f"failure: {f}")
        text = "\n".join(body) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if not failures else EXIT_VERIFICATION


def cmd_check(args) -> int:
    try:
        setting, name = _load_setting(args)
    except NotAComplex as exc:
        sys.stdout.write(f"NotAComplex: {exc}\n")
        return EXIT_VERIFICATION
    comp = setting.ops
    n = comp.n
    failures: List[str] = []
    from abch.complexes import conjugation_matrix

    conj_ok = True
    for p in range(n + 1):
        for q in range(n + 1):
            lhs = conjugation_matrix(n, p + 1, q) @ comp.del_((p, q)).conj()
            rhs = comp.delbar((q, p)) @ conjugation_matrix(n, p, q)
            if lhs != rhs:
                conj_ok = False
    if not conj_ok:
        failures.append("conjugation does not intertwine del and delbar")
    lines = [f"# check {name}", "", f"- complex identities: ok (certified during assembly)",
             f"- conjugation intertwines del/delbar: {'ok' if conj_ok else 'FAIL'}", ""]
    payload = {"command": "check", "model": name, "conjugation_ok": conj_ok}
    return _emit(args, lines, payload, failures)


def cmd_cohomology(args) -> int:
    setting, name = _load_setting(args)
    n = setting.n
    tables = coh.all_tables(setting)
    sym = coh.table_symmetries(tables, n)
    harm = coh.harmonic_dims(setting)
    failures: List[str] = []
    hodge_ok = all(harm[t] == tables[t].grid for t in ("del", "delbar", "bc", "a")) and harm[
        "deRham"
    ] == tables["deRham"].betti
    if not hodge_ok:
        failures.append("harmonic dimensions differ from rank-nullity dimensions")
    for k, v in sym.items():
        if not v:
            failures.append(f"table symmetry violated: {k}")
    if args.backend == "both":
        numeric = NumericSetting(setting)
        for p in range(n + 1):
            for q in range(n + 1):
                bundle = LaplacianBundle.build(setting, numeric, (p, q))
                failures.extend(bundle.crosscheck())
    lines = [f"# cohomology {name}", ""]
    for t in ("bc", "a", "del", "delbar"):
        lines += reporting.grid_md(f"h_{t}", tables[t].grid)
    lines += reporting.list_md("betti", tables["deRham"].betti)
    lines += reporting.checks_md({"hodge_isomorphism": hodge_ok, **sym})
    payload = {
        "command": "cohomology",
        "model": name,
        "metric_hash": reporting.metric_hash(setting.metric.H),
        "tables": {t: tables[t].grid for t in ("bc", "a", "del", "delbar")},
        "betti": tables["deRham"].betti,
        "symmetries": sym,
        "hodge_isomorphism": hodge_ok,
    }
    if args.format == "csv":
        lines = []
        for t in ("bc", "a", "del", "delbar"):
            lines += reporting.render_csv_grid(f"h_{t}", tables[t].grid)
        lines += reporting.render_csv_grid("betti", [tables["deRham"].betti])
    return _emit(args, lines, payload, failures)


def cmd_spectra(args) -> int:
    if args.backend == "exact":
        raise ModelError("spectra need the numeric backend (use --backend numeric or both)")
    setting, name = _load_setting(args)
    n = setting.n
    numeric = NumericSetting(setting)
    pq = _parse_pq(args.pq, n)
    targets = [pq] if pq else [(p, q) for p in range(n + 1) for q in range(n + 1)]
    failures: List[str] = []
    lines = [f"# spectra {name}", ""]
    spectra_payload: Dict[str, dict] = {}
    for b in targets:
        bundle = LaplacianBundle.build(setting, numeric, b)
        if args.backend == "both":
            failures.extend(bundle.crosscheck())
        entry = {}
        for kind in ALL_KINDS:
            ev = [format(x, ".12g") for x in bundle.spectra[kind]]
            gap = bundle.gaps[kind]
            entry[kind.value] = {
                "eigenvalues": ev,
                "gap": None if gap is None else format(gap, ".12g"),
                "kernel_dim": bundle.kernels[kind].ncols,
                "kernel_basis": reporting.matrix_payload(bundle.kernels[kind]),
            }
            lines.append(
                f"- {b} {kind.value}: kernel {bundle.kernels[kind].ncols}, gap "
                + ("AllZero" if gap is None else format(gap, ".12g"))
            )
        spectra_payload[str(b)] = entry
    lines.append("")
    payload = {
        "command": "spectra",
        "model": name,
        "metric_hash": reporting.metric_hash(setting.metric.H),
        "spectra": spectra_payload,
    }
    return _emit(args, lines, payload, failures)


def cmd_diagram(args) -> int:
    setting, name = _load_setting(args)
    n = setting.n
    pq = _parse_pq(args.pq, n)
    degrees = [pq[0] + pq[1]] if pq else list(range(2 * n + 1))
    failures: List[str] = []
    lines = [f"# diagram {name}", ""]
    payload_arrows: Dict[str, dict] = {}
    for k in degrees:
        rep = coh.diagram_maps(setting, k)
        if not rep.commutes:
            failures.append(f"diagram does not commute at degree {k}")
        entry = {}
        for arrow_name, arrow in rep.arrows.items():
            entry[arrow_name] = {"injective": arrow.injective, "surjective": arrow.surjective}
            lines.append(
                f"- degree {k} {arrow_name}: injective={arrow.injective} surjective={arrow.surjective}"
            )
        payload_arrows[str(k)] = {"arrows": entry, "commutes": rep.commutes,
                                  "all_isomorphisms": rep.all_isomorphisms}
    lines.append("")
    payload = {"command": "diagram", "model": name, "degrees": payload_arrows}
    return _emit(args, lines, payload, failures)


def cmd_ddbar(args) -> int:
    setting, name = _load_setting(args)
    rep = coh.ddbar_conditions(setting)
    failures: List[str] = []
    lines = [f"# ddbar {name}", ""]
    for cond in coh.CONDITION_NAMES:
        lines.append(f"- condition {cond}: {rep['holds'][cond]}")
    lines.append(f"- all agree: {rep['all_agree']}")
    for cond, w in sorted(rep["witnesses"].items()):
        lines.append(f"- witness for {cond} at {w['bidegree']}: [{', '.join(w['form'])}]")
    lines.append("")
    payload = {"command": "ddbar", "model": name, **rep}
    return _emit(args, lines, payload, failures)


def cmd_inequality(args) -> int:
    setting, name = _load_setting(args)
    lib = coh.SubspaceLib(setting)
    grids = coh.abc_subspaces(setting, lib)
    seqs = coh.exact_sequence_reports(setting, lib)
    rep = coh.inequality_report(setting, grids=grids, lib=lib)
    failures: List[str] = []
    if not grids.routes_agree:
        failures.append("intersection and quotient dimensions disagree")
    if not grids.conjugation_ok:
        failures.append("conjugation symmetry of subspace grids fails")
    if not seqs["all_exact"]:
        failures.append("an exact sequence fails")
    if not rep.identity_holds:
        failures.append("h_bc + h_a != h_del + h_delbar + a + f somewhere")
    if not rep.criterion_consistent:
        failures.append("equality criterion mismatch")
    lines = [f"# inequality {name}", ""]
    for x in "abcdef":
        lines += reporting.grid_md(f"dim {x}", grids.dims[x])
    lines += reporting.grid_md("defect a+f", rep.defect)
    lines += reporting.grid_md("h_del+h_delbar", rep.lhs)
    lines += reporting.grid_md("h_a+h_bc", rep.rhs)
    lines += reporting.checks_md(
        {
            "routes_agree": grids.routes_agree,
            "conjugation": grids.conjugation_ok,
            "sequences_exact": seqs["all_exact"],
            "identity": rep.identity_holds,
            "criterion": rep.criterion_consistent,
        }
    )
    payload = {
        "command": "inequality",
        "model": name,
        "metric_hash": reporting.metric_hash(setting.metric.H),
        "subspace_dims": grids.dims,
        "defect": rep.defect,
        "lhs": rep.lhs,
        "rhs": rep.rhs,
        "equality_bidegrees": [list(b) for b in rep.equality_bidegrees],
        "identity_holds": rep.identity_holds,
        "criterion_consistent": rep.criterion_consistent,
        "sequences_exact": seqs["all_exact"],
        "degree_sums": rep.degree_sums,
    }
    if args.format == "csv":
        lines = []
        for x in "abcdef":
            lines += reporting.render_csv_grid(f"dim_{x}", grids.dims[x])
        lines += reporting.render_csv_grid("defect", rep.defect)
    return _emit(args, lines, payload, failures)


def cmd_abc(args) -> int:
    setting, name = _load_setting(args)
    n = setting.n
    pq = _parse_pq(args.pq, n)
    if pq is None:
        raise ModelError("`abc` needs --pq P,Q")
    fc = coh.full_abc_complex(setting, pq)
    tables = coh.all_tables(setting)
    failures: List[str] = []
    if fc.h != fc.harmonic_dims:
        failures.append("node cohomology differs from harmonic dimension")
    if fc.euler_spaces != fc.euler_h:
        failures.append("Euler characteristics disagree")
    p, q = pq
    if fc.node_bc is not None and fc.node_bc != tables["bc"].grid[p][q]:
        failures.append("corner node does not reproduce the Bott-Chern dimension")
    if fc.node_a is not None and p >= 1 and q >= 1 and fc.node_a != tables["a"].grid[p - 1][q - 1]:
        failures.append("pre-corner node does not reproduce the Aeppli dimension")
    lines = [f"# abc {name} at {pq}", ""]
    lines.append("| k | space | dim | h^k | ker-laplacian |")
    lines.append("| --- | --- | --- | --- | --- |")
    for k, sp in enumerate(fc.spaces):
        dim = setting.space_dim(sp)
        lines.append(
            f"| {k} | {'+'.join(str(b) for b in sp) or '0'} | {dim} | {fc.h[k]} | {fc.harmonic_dims[k]} |"
        )
    lines.append("")
    lines.append(f"- euler(spaces) = {fc.euler_spaces}, euler(h) = {fc.euler_h}")
    lines.append(f"- corner nodes: bc={fc.node_bc}, a={fc.node_a}")
    lines.append("")
    payload = {
        "command": "abc",
        "model": name,
        "target": list(pq),
        "h": fc.h,
        "harmonic_dims": fc.harmonic_dims,
        "space_dims": [setting.space_dim(sp) for sp in fc.spaces],
        "euler_spaces": fc.euler_spaces,
        "euler_h": fc.euler_h,
        "node_bc": fc.node_bc,
        "node_a": fc.node_a,
    }
    return _emit(args, lines, payload, failures)


def cmd_cover(args) -> int:
    path = args.cover or args.path
    spec = load_cover(path)
    if args.metric:
        mn, H = load_metric(args.metric)
        if mn != spec.n:
            raise ModelError(f"metric dimension {mn} does not match cover dimension {spec.n}")
    else:
        H = Mat.identity(spec.n)
    fourier = build_cover(spec, H)
    rep = gamma_tables(fourier)
    gap_rep = gap_and_closed_image(fourier, samples=args.samples, seed=args.seed)
    H2 = H.scale(QQi(2))
    mi = metric_independence_check(spec, H, H2)
    failures: List[str] = []
    if not rep.inequality_ok:
        failures.append("Gamma-dimension inequality fails")
    if not rep.monotonicity_ok:
        failures.append("Gamma-dimension monotonicity fails")
    if not rep.harmonic_support_ok:
        failures.append("a harmonic form lives outside the zero mode")
    if not gap_rep["all_ok"]:
        failures.append("a spectral-gap bound fails")
    if not (mi["gamma_dims_agree"] and mi["cross_projection_full_rank"] and mi["sampled_ratios_within_bound"]):
        failures.append("metric independence fails")
    lines = [f"# cover {path}", "", f"- deck group order: {fourier.index}",
             f"- modes: {fourier.mode_count()}", ""]
    for t in ("bc", "a", "del", "delbar"):
        lines += reporting.grid_md(f"h_{t} (Gamma)", rep.grids[t])
    lines += reporting.list_md("betti (Gamma)", rep.grids["deRham"])
    gd = rep.gaps
    lines.append(f"- gap(lap_d) = {reporting._cell(gd['d'])}")
    lines.append(f"- gap(lap_del) = {reporting._cell(gd['del'])}")
    lines.append(f"- gap(lap_delbar) = {reporting._cell(gd['delbar'])}")
    lines.append(f"- quasi-isometry constant vs doubled metric: {reporting._cell(mi['quasi_isometry_constant'])}")
    lines += reporting.checks_md(
        {
            "inequality_with_equality": rep.equality_everywhere,
            "monotonicity": rep.monotonicity_ok,
            "harmonic_support": rep.harmonic_support_ok,
            "gap_bounds": bool(gap_rep["all_ok"]),
            "metric_independence": mi["gamma_dims_agree"],
        }
    )
    payload = {
        "command": "cover",
        "cover": path,
        "index": fourier.index,
        "mode_count": fourier.mode_count(),
        "grids": rep.grids,
        "gaps": {k: v for k, v in rep.gaps.items()},
        "inequality_ok": rep.inequality_ok,
        "equality_everywhere": rep.equality_everywhere,
        "metric_independence": mi,
        "gap_report": gap_rep,
    }
    return _emit(args, lines, payload, failures)


COMMANDS = {
    "check": cmd_check,
    "cohomology": cmd_cohomology,
    "spectra": cmd_spectra,
    "diagram": cmd_diagram,
    "ddbar": cmd_ddbar,
    "inequality": cmd_inequality,
    "abc": cmd_abc,
    "cover": cmd_cover,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="abch", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("path", help="model file (.cplx), or cover file (.cover) for `cover`")
    ap.add_argument("--metric", help="Hermitian metric file (.herm); identity if omitted")
    ap.add_argument("--cover", help="cover file (.cover) for the `cover` command")
    ap.add_argument("--backend", choices=["exact", "numeric", "both"], default="exact")
    ap.add_argument("--format", choices=["md", "json", "csv"], default="md")
    ap.add_argument("--pq", help="bidegree P,Q")
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--out", help="write the report to FILE instead of stdout")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except NotAComplex as exc:
        sys.stderr.write(f"NotAComplex: {exc}\n")
        return EXIT_VERIFICATION
    except (ModelError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except Exception as exc:  # input-shaped problems (bad metric, bad lattice)
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
