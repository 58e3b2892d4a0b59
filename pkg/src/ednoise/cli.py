"""Command-line entry point: ``ednoise <subcommand> ...``.

Exit status: 0 success, 2 invalid input or usage, 1 internal error (or, for
``verify``, a failed check).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import platform
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from . import calibrate as cal
from . import flipprob, stats, transitions
from .evaluate import degradation_sweep, sweep_csv
from .graph import degree_distribution, generate, load_graph, save_graph, subgraph_mask
from .injector import VARIANT_NAMES, NoiseSpec, inject

EDN_VARIANTS = [v for v in VARIANT_NAMES if "-" in v]
FLIP_COLUMNS = ["q_mv", "r_veto", "s_seq_sln", "s_seq_pwn"]

GRAPH_FORMATS = """\
input formats:
  --graph   edge list, one "u v" or "u<TAB>v" pair of non-negative integer
            node ids per line; lines starting with '#' are comments, and an
            optional "# nodes: N" line fixes the node count.  By default each
            line is a directed arc and reversed duplicates are merged
            (--undirected-lines makes every unordered pair appear once).
  --labels  CSV "node_id,label" with an optional header row; labels are
            0-based class ids (--one-based-labels for 1..K); every node
            0..N-1 needs a label.
  --mask-ids  one node id per line ('#' comments allowed).
"""


class UsageError(ValueError):
    pass


# --- helpers --------------------------------------------------------------


def _floats(text: str) -> list[float]:
    return [float(t) for t in str(text).replace(";", ",").split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _levels(values) -> list[float]:
    levels = [lvl for v in values for lvl in _floats(v)]
    for lvl in levels:
        if not 0.0 <= lvl <= 1.0:
            raise UsageError(f"noise levels are fractions in [0, 1], got {lvl}")
    return levels


def _emit(text: str, out: str | None) -> list[Path]:
    if out is None:
        sys.stdout.write(text)
        return []
    path = Path(out)
    path.write_text(text)
    return [path]


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _version(pkg: str) -> str:
    try:
        return metadata.version(pkg)
    except metadata.PackageNotFoundError:
        return "unknown"


def write_manifest(args, argv, outputs: list[Path]) -> Path | None:
    """Record how the outputs were produced; nothing time- or host-dependent."""
    if not outputs:
        return None
    manifest = {
        "subcommand": args.command,
        "argv": list(argv),
        "seed": getattr(args, "seed", None),
        "versions": {
            "ednoise": _version("artifact"),
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "outputs": {str(p): _digest(p) for p in outputs},
    }
    path = Path(str(outputs[0]) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _load(args):
    g = load_graph(
        args.graph,
        args.labels,
        directed_arcs=not args.undirected_lines,
        num_classes=args.num_classes,
        one_based_labels=args.one_based_labels,
    )
    return g


def _read_ids(path) -> list[int]:
    ids = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            ids.append(int(line))
    return ids


def _read_matrix(path) -> np.ndarray:
    rows = [
        [float(x) for x in line.split(",")]
        for line in Path(path).read_text().splitlines()
        if line.strip() and not line.startswith("#")
    ]
    return np.array(rows)


# --- subcommands ----------------------------------------------------------


def cmd_probs(args):
    cols = [
        flipprob.flip_prob_table(v, args.rho, args.k, args.max_degree).probs
        for v in flipprob.Variant
    ]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["degree", *FLIP_COLUMNS])
    for d in range(args.max_degree + 1):
        writer.writerow([d, *(repr(float(c[d])) for c in cols)])
    return _emit(buf.getvalue(), args.out)


def cmd_calibrate(args):
    g = _load(args)
    mask = subgraph_mask(g, "calibration", _read_ids(args.mask_ids)) if args.mask_ids else None
    dist = degree_distribution(g, mask)
    k = args.k or g.num_classes
    variants = args.variant or ["mv-sln", "veto-sln", "seq-sln", "seq-pwn"]
    levels = _levels(args.level or ["0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5"])
    results = cal.calibration_table(dist, variants, k, levels, args.tolerance)
    outputs = _emit(json.dumps([r.to_dict() for r in results], indent=2) + "\n", args.out)
    if args.csv:
        outputs += _emit(cal.table_csv(results), args.csv)
    return outputs


def cmd_inject(args):
    g = _load(args)
    mask = subgraph_mask(g, "target", _read_ids(args.mask_ids)) if args.mask_ids else None
    if (args.rho is None) == (args.level is None):
        raise UsageError("give exactly one of --rho or --level")
    rho = args.rho
    if args.level is not None:
        dist = degree_distribution(g, mask)
        rho = cal.calibrate_rho(dist, args.variant, g.num_classes, args.level).rho
    ccn = _read_matrix(args.ccn_matrix) if args.ccn_matrix else None
    spec = NoiseSpec.from_variant(args.variant, rho, ccn_matrix=ccn, target_mask=mask)
    outcome = inject(g, spec, args.seed, workers=args.workers)
    if args.out is None:
        sys.stdout.write(outcome.to_csv())
        return []
    return list(outcome.write(args.out))


def _verify_rows(ks, rhos, max_degree, max_power):
    tol_flip, tol_power = 1e-12, 1e-10
    for variant in flipprob.Variant:
        for k in ks:
            for rho in rhos:
                for d in range(max_degree + 1):
                    closed = flipprob.flip_prob(variant, d, rho, k)
                    oracle = flipprob.flip_prob_bruteforce(variant, rho, k, d)
                    yield "flip", variant.value, k, rho, d, closed, oracle, tol_flip
    for k in ks:
        for rho in rhos:
            sln, pwn = transitions.q_sln(k, rho), transitions.q_pwn(k, rho)
            ref_sln, ref_pwn = np.eye(k), np.eye(k)
            for n in range(max_power + 1):
                a = transitions.sln_power_closed(k, rho, n).rows
                b = transitions.pwn_power_closed(k, rho, n).expand().rows
                err_a = float(np.abs(a - ref_sln).max())
                err_b = float(np.abs(b - ref_pwn).max())
                yield "power", "sln", k, rho, n, err_a, 0.0, tol_power
                yield "power", "pwn", k, rho, n, err_b, 0.0, tol_power
                ref_sln, ref_pwn = ref_sln @ sln.rows, ref_pwn @ pwn.rows


def cmd_verify(args):
    ks = _ints(args.k_list)
    rhos = _floats(args.rho_list)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["check", "variant", "k", "rho", "n", "closed", "reference", "abs_err", "tol", "pass"])
    failures = total = 0
    for check, variant, k, rho, n, closed, ref, tol in _verify_rows(
        ks, rhos, args.max_degree, args.max_power
    ):
        if check == "power":
            err, closed, ref = closed, "", ""
        else:
            err = abs(closed - ref)
            closed, ref = repr(closed), repr(ref)
        ok = err < tol
        total += 1
        failures += not ok
        writer.writerow([check, variant, k, repr(rho), n, closed, ref, repr(err), tol, int(ok)])
    outputs = _emit(buf.getvalue(), args.out)
    print(f"verify: {total - failures}/{total} checks passed", file=sys.stderr)
    args.failed = failures > 0
    return outputs


def _summary_pair(args):
    if args.summaries:
        data = json.loads(Path(args.summaries).read_text())
        n = data.get("n")

        def one(d):
            return stats.SampleSummary(int(d.get("n", n)), float(d["mean"]), float(d["std"]))

        return one(data["a"]), one(data["b"])
    if args.runs_csv:
        groups: dict[str, list[float]] = {}
        with open(args.runs_csv) as fh:
            for row in csv.DictReader(fh):
                groups.setdefault(row["group"], []).append(float(row["accuracy"]))
        names = list(groups)
        ga = args.group_a or (names[0] if names else None)
        gb = args.group_b or (names[1] if len(names) > 1 else None)
        if ga not in groups or gb not in groups:
            raise UsageError(f"runs CSV needs groups {ga!r} and {gb!r}; found {names}")
        return (
            stats.SampleSummary.from_samples(groups[ga]),
            stats.SampleSummary.from_samples(groups[gb]),
        )
    if args.a and args.b and args.n:
        (ma, sa), (mb, sb) = _floats(args.a), _floats(args.b)
        return stats.SampleSummary(args.n, ma, sa), stats.SampleSummary(args.n, mb, sb)
    raise UsageError("give --summaries, --runs-csv, --batch, or --a/--b with --n")


def cmd_ttest(args):
    if args.batch:
        records = []
        with open(args.batch) as fh:
            for row in csv.DictReader(fh):
                n = int(row["n"])
                a = stats.SampleSummary(n, float(row["a_mean"]), float(row["a_std"]))
                b = stats.SampleSummary(n, float(row["b_mean"]), float(row["b_std"]))
                report = stats.run_test(a, b, args.alpha, welch=args.welch)
                tags = {k: row[k] for k in ("dataset", "model", "variant")}
                tags["level"] = float(row["level"])
                records.append((tags, report))
        payload = [{**tags, **rep.to_dict()} for tags, rep in records]
        outputs = _emit(json.dumps(payload, indent=2) + "\n", args.out)
        if args.table_out:
            group_by = tuple(args.group_by.split(","))
            rows = stats.summarize_matrix(records, group_by)
            outputs += _emit(stats.summary_csv(rows, group_by), args.table_out)
        return outputs
    a, b = _summary_pair(args)
    report = stats.run_test(a, b, args.alpha, welch=args.welch)
    return _emit(json.dumps(report.to_dict(), indent=2) + "\n", args.out)


def cmd_gen(args):
    params = {"n": args.n, "p": args.p, "m_attach": args.m_attach, "k": args.num_classes or 2}
    if args.sizes:
        params["sizes"] = _ints(args.sizes)
    params["p_in"], params["p_out"] = args.p_in, args.p_out
    params = {k: v for k, v in params.items() if v is not None}
    g = generate(args.kind, params, args.seed)
    edge_path = Path(f"{args.out}.edges")
    label_path = Path(f"{args.out}.labels.csv")
    save_graph(g, edge_path, label_path)
    return [edge_path, label_path]


def cmd_eval(args):
    g = _load(args)
    variants = args.variant or ["sln", "mv-sln", "veto-sln", "seq-sln", "pwn", "mv-pwn", "veto-pwn", "seq-pwn"]
    levels = _levels(args.level or ["0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5"])
    results = degradation_sweep(
        g,
        variants,
        levels,
        args.runs,
        args.seed,
        train_per_class=args.train_per_class,
        iterations=args.iterations,
        workers=args.workers,
    )
    return _emit(sweep_csv(results), args.out)


# --- parser -----------------------------------------------------------------


def _graph_args(p):
    p.add_argument("--graph", required=True, help="edge list file")
    p.add_argument("--labels", required=True, help="node_id,label CSV")
    p.add_argument("--undirected-lines", action="store_true",
                   help="each unordered pair appears exactly once; duplicates are errors")
    p.add_argument("--one-based-labels", action="store_true", help="labels in the file are 1..K")
    p.add_argument("--num-classes", type=int, default=None, help="override K (default max label + 1)")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    parser = argparse.ArgumentParser(prog="ednoise", description=__doc__, formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "probs",
        help="per-degree flip probabilities of the four EDN variants",
        formatter_class=fmt,
        epilog="output: CSV header 'degree,q_mv,r_veto,s_seq_sln,s_seq_pwn', one row per\n"
        "degree 0..--max-degree, values as shortest round-trip decimals.\n"
        "All four columns are always written; --variant only validates a name.",
    )
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--k", type=int, default=7, help="class count for the sequential variants")
    p.add_argument("--max-degree", type=int, default=50)
    p.add_argument("--variant", choices=[v.value for v in flipprob.Variant])
    p.add_argument("--out")
    p.set_defaults(func=cmd_probs)

    p = sub.add_parser(
        "calibrate",
        help="solve for rho giving target expected noise levels",
        formatter_class=fmt,
        epilog=GRAPH_FORMATS
        + "\noutput: JSON array of {variant, target_level, rho, achieved_level, iterations};\n"
        "--csv adds a table with header 'level,<variant>...' and calibrated rho cells.",
    )
    _graph_args(p)
    p.add_argument("--variant", action="append", choices=VARIANT_NAMES,
                   help="repeatable; default mv-sln, veto-sln, seq-sln, seq-pwn")
    p.add_argument("--level", action="append", help="comma-separated fractions; repeatable")
    p.add_argument("--k", type=int, default=None, help="class count (default: from labels)")
    p.add_argument("--tolerance", type=float, default=cal.DEFAULT_TOL)
    p.add_argument("--mask-ids", help="restrict the degree distribution to these nodes")
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser(
        "inject",
        help="inject label noise into a graph",
        formatter_class=fmt,
        epilog=GRAPH_FORMATS
        + "  --ccn-matrix  K rows of K comma-separated off-diagonal rates (diagonal ignored).\n"
        "\noutput: CSV header 'node_id,original_label,noisy_label,flipped' (flipped is 0/1);\n"
        "sidecar <out>.json {seed, spec, realized_noise, num_noisy_edges};\n"
        "manifest <out>.manifest.json with argv, versions and SHA-256 of outputs.",
    )
    _graph_args(p)
    p.add_argument("--variant", required=True, choices=VARIANT_NAMES)
    p.add_argument("--rho", type=float)
    p.add_argument("--level", type=float, help="calibrate rho to this expected level instead")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--ccn-matrix")
    p.add_argument("--mask-ids", help="only these nodes may change label")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser(
        "verify",
        help="check closed forms against enumeration and matrix-power oracles",
        formatter_class=fmt,
        epilog="output: CSV header 'check,variant,k,rho,n,closed,reference,abs_err,tol,pass'.\n"
        "flip rows compare closed forms with 2^deg enumeration (tol 1e-12); power rows\n"
        "give max |closed - repeated multiplication| over the matrix (tol 1e-10).\n"
        "Exit status 1 if any check fails.",
    )
    p.add_argument("--k-list", default="2..8", help="e.g. '2..8' or '3,5,7'")
    p.add_argument("--rho-list", default="0.05,0.1,0.25,0.5,0.8")
    p.add_argument("--max-degree", type=int, default=12)
    p.add_argument("--max-power", type=int, default=50)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser(
        "ttest",
        help="one-sided pooled t test: does b (EDN) score lower than a (baseline)?",
        formatter_class=fmt,
        epilog="inputs (one of):\n"
        "  --a MEAN,STD --b MEAN,STD --n N\n"
        "  --summaries JSON  {\"n\": N, \"a\": {\"mean\": .., \"std\": ..}, \"b\": {...}}\n"
        "                    (per-sample \"n\" keys override the top-level one)\n"
        "  --runs-csv CSV    header 'group,run,accuracy'; --group-a/--group-b pick groups\n"
        "                    (default: first two groups in file order)\n"
        "  --batch CSV       header 'dataset,model,level,variant,n,a_mean,a_std,b_mean,b_std'\n"
        "\noutput: JSON {t_stat, df, alpha, critical, reject, pooled_var, mean_diff,\n"
        "method, direction} (a list of these plus tags for --batch); --table-out writes\n"
        "CSV '<group_by...>,band,rejected,total,fraction,label' with bands Low (5-15%),\n"
        "Medium (20-35%), High (40-50%) and Overall.",
    )
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--n", type=int)
    p.add_argument("--summaries")
    p.add_argument("--runs-csv")
    p.add_argument("--group-a")
    p.add_argument("--group-b")
    p.add_argument("--batch")
    p.add_argument("--table-out")
    p.add_argument("--group-by", default="variant")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--welch", action="store_true", help="Welch-Satterthwaite df instead of 2n-2")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ttest)

    p = sub.add_parser(
        "gen",
        help="generate a synthetic graph",
        formatter_class=fmt,
        epilog="output: <out>.edges (with a '# nodes: N' header, one undirected edge per\n"
        "line) and <out>.labels.csv ('node_id,label').  Read them back with\n"
        "--undirected-lines.  ER/BA labels are uniform over --num-classes (default 2);\n"
        "SBM labels are community indices.",
    )
    p.add_argument("--kind", required=True, choices=["er", "ba", "sbm"])
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--m-attach", type=int)
    p.add_argument("--sizes", help="SBM community sizes, comma-separated")
    p.add_argument("--p-in", type=float)
    p.add_argument("--p-out", type=float)
    p.add_argument("--num-classes", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser(
        "eval",
        help="label-propagation accuracy under calibrated noise levels",
        formatter_class=fmt,
        epilog=GRAPH_FORMATS
        + "\noutput: CSV header 'variant,level,rho,mean_acc,std_acc,runs'; accuracy is the\n"
        "clean-label fraction correct on test nodes, std uses n-1.",
    )
    _graph_args(p)
    p.add_argument("--variant", action="append", choices=VARIANT_NAMES)
    p.add_argument("--level", action="append")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--train-per-class", type=int, default=20)
    p.add_argument("--iterations", type=int, default=20)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        outputs = args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"ednoise {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"ednoise {args.command}: internal error: {exc!r}", file=sys.stderr)
        return 1
    write_manifest(args, argv, outputs)
    return 1 if getattr(args, "failed", False) else 0


if __name__ == "__main__":
    sys.exit(main())
