"""Command-line entry point: ingest -> analyses -> reports, plus the
campaign server. Exit codes: 0 success, 1 data error, 2 usage error."""

from __future__ import annotations

import argparse
import sys

from .errors import WorkbenchError
from . import agreement as agreement_mod
from . import consistency as consistency_mod
from . import profiling as profiling_mod
from . import ranking as ranking_mod
from . import scoring as scoring_mod
from .campaign import Campaign, assign_tasks, load_assignment, save_assignment
from .ingest import load_project, save_project
from .model import Project, SegmentRef, Setting, validate_project
from .reports import FORMATS, build_meta, write_report

SETTINGS = [s.value for s in Setting]
PAIR_GROUPS = ("top2", "high_sim_1", "high_sim_2", "low_sim_1", "low_sim_2")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sxseval",
        description="Annotation campaigns and meta-evaluation for MT human evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, project=True):
        if project:
            p.add_argument("--project", required=True, help="project store directory")
        p.add_argument("--out", default="reports", help="report output directory")
        p.add_argument(
            "--format", default="tsv", choices=FORMATS, help="report file format"
        )
        p.add_argument("--setting", choices=SETTINGS, help="restrict to one setting")
        zgroup = p.add_mutually_exclusive_group()
        zgroup.add_argument("--z", dest="use_z", action="store_true", default=True)
        zgroup.add_argument("--no-z", dest="use_z", action="store_false")
        p.add_argument(
            "--exclude-annotators",
            default="",
            help="comma-separated annotator ids to drop before analysis",
        )
        p.add_argument(
            "--auto-exclude-outliers",
            action="store_true",
            help="drop annotators with error-count z > 2 in any MQM setting",
        )
        p.add_argument("--trials", type=int, default=10000)
        p.add_argument("--seed", type=int, default=0)
        return p

    for name, desc in [
        ("validate", "check every model invariant over the store"),
        ("score", "per-annotator, per-segment and per-system scores"),
        ("agreement", "inter-annotator agreement (alpha), tie rates, buckets"),
        ("itc", "inter-translation consistency report"),
        ("pra", "pairwise ranking agreement between settings"),
        ("rank", "pairwise system rankings with permutation tests"),
        ("distribution", "error category/severity distribution"),
        ("conversion", "cross-setting category conversion matrix"),
        ("outliers", "annotator error-count outliers"),
    ]:
        common(sub.add_parser(name, help=desc))

    select = common(sub.add_parser("select-pairs", help="pick the 5 system pairs"))
    select.add_argument(
        "--metric-scores",
        required=True,
        help="TSV with columns system, doc_id, seg_id, score",
    )

    assign = common(sub.add_parser("assign", help="assign documents to annotators"))
    assign.add_argument("--annotators", required=True, help="comma-separated pool")
    assign.add_argument("--per-doc", type=int, default=3, help="annotators per document")

    serve = sub.add_parser("serve", help="run the annotation service")
    serve.add_argument("--project", required=True)
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--ui", default=None, help="static UI directory to mount")

    export = sub.add_parser("export", help="fold the journal into canonical TSVs")
    export.add_argument("--project", required=True)

    return parser


def _config(args) -> dict:
    # the output directory is where the report lands, not what it says
    return {
        k: v for k, v in sorted(vars(args).items()) if k not in ("command", "out")
    }


def _load(args) -> Project:
    project = load_project(args.project)
    excluded = [a for a in args.exclude_annotators.split(",") if a]
    if args.auto_exclude_outliers:
        for setting in (Setting.MQM, Setting.SXS_MQM):
            if not project.has_setting(setting):
                continue
            try:
                stats = profiling_mod.annotator_outliers(project, setting)
            except WorkbenchError:
                continue
            excluded.extend(s.annotator for s in stats if s.flagged)
    if excluded:
        project = scoring_mod.exclude_annotators(project, sorted(set(excluded)))
    return project


def _settings(args, project: Project) -> list[Setting]:
    if args.setting:
        return [Setting(args.setting)]
    return [s for s in Setting if project.has_setting(s)]


def _pair_group(project: Project, pair) -> str:
    if len(project.designated_pairs) == 5:
        return PAIR_GROUPS[list(project.designated_pairs).index(tuple(pair))]
    return "pair"


def cmd_validate(args) -> list[tuple[str, list[str], list[dict]]]:
    project = load_project(args.project)
    violations = validate_project(project)
    rows = [
        {"code": v.code, "where": v.where, "message": v.message} for v in violations
    ]
    reports = [("violations", ["code", "where", "message"], rows)]
    if violations:
        raise WorkbenchError(
            "E_VALIDATION", f"{len(violations)} violations found", {"reports": reports}
        )
    return reports


def cmd_score(args):
    project = _load(args)
    rows = []
    for setting in _settings(args, project):
        table = scoring_mod.build_score_table(project, setting, use_z=args.use_z)
        rows.extend(scoring_mod.score_table_rows(table))
    return [("scores", ["setting", "system", "doc_id", "seg_id", "rater", "raw", "z"], rows)]


def cmd_agreement(args):
    project = _load(args)
    rows = []
    for setting in _settings(args, project):
        matrix = agreement_mod.build_label_matrix(project, setting)
        scopes: list[tuple[str, agreement_mod.LabelMatrix]] = [("all", matrix)]
        if len(project.designated_pairs) == 5:
            pairs = list(project.designated_pairs)
            scopes.append(("top2", agreement_mod.restrict_matrix_pairs(matrix, pairs[:1])))
            scopes.append(
                ("high_sim", agreement_mod.restrict_matrix_pairs(matrix, pairs[1:3]))
            )
            scopes.append(
                ("low_sim", agreement_mod.restrict_matrix_pairs(matrix, pairs[3:5]))
            )
        # count tokens on the English side: the source when translating out
        # of English, the targets otherwise
        side_rule = "source" if project.language_pair.startswith("en-") else "target"
        try:
            buckets = agreement_mod.length_buckets(project, 3, side_rule=side_rule)
        except WorkbenchError:
            buckets = []
        for i, bucket in enumerate(buckets, start=1):
            scopes.append(
                (f"bucket-{i}", agreement_mod.restrict_matrix(matrix, bucket))
            )
        for scope, sub in scopes:
            row = {
                "setting": setting.value,
                "scope": scope,
                "alpha": "",
                "n_units": len(sub.units),
                "n_labels": len(sub.labels),
                "tie_rate": "",
            }
            try:
                result = agreement_mod.krippendorff_alpha(sub)
                row["alpha"] = result.alpha
            except WorkbenchError as exc:
                row["alpha"] = f"undefined ({exc.code})"
            if sub.labels:
                row["tie_rate"] = agreement_mod.tie_rate(sub)
            rows.append(row)
    return [
        ("agreement", ["setting", "scope", "alpha", "n_units", "n_labels", "tie_rate"], rows)
    ]


def cmd_itc(args):
    project = _load(args)
    rows = []
    settings = [
        s for s in _settings(args, project) if s in (Setting.MQM, Setting.SXS_MQM)
    ]
    for setting in settings:
        for scope in ("designated", "non_designated"):
            rows.extend(consistency_mod.itc_report(project, setting, scope))
    columns = [
        "scope",
        "setting",
        "criterion",
        "language_pair",
        "mean_percentage",
        "n_annotators",
        "n_pairs",
    ]
    return [("itc", columns, rows)]


def cmd_pra(args):
    project = _load(args)
    available = [s for s in Setting if project.has_setting(s)]
    labels = {
        s: ranking_mod.setting_unit_labels(project, s, use_z=args.use_z)
        for s in available
    }
    rows = []
    for i, sa in enumerate(available):
        for sb in available[i + 1 :]:
            common = set(labels[sa]) & set(labels[sb])
            counts, value = ranking_mod.pra(
                {u: labels[sa][u] for u in common},
                {u: labels[sb][u] for u in common},
            )
            rows.append(
                {
                    "setting_alpha": sa.value,
                    "setting_beta": sb.value,
                    "concordant": counts.concordant,
                    "discordant": counts.discordant,
                    "tied_only_alpha": counts.tied_only_alpha,
                    "tied_only_beta": counts.tied_only_beta,
                    "tied_both": counts.tied_both,
                    "n_units": counts.total,
                    "pra": value,
                }
            )
    columns = [
        "setting_alpha",
        "setting_beta",
        "concordant",
        "discordant",
        "tied_only_alpha",
        "tied_only_beta",
        "tied_both",
        "n_units",
        "pra",
    ]
    return [("pra", columns, rows)]


def cmd_rank(args):
    project = _load(args)
    rows = []
    for setting in _settings(args, project):
        for pair in project.designated_pairs:
            result = ranking_mod.rank_system_pair(
                project, setting, pair, trials=args.trials, seed=args.seed,
                use_z=args.use_z,
            )
            rows.append(
                {
                    "group": _pair_group(project, pair),
                    "setting": setting.value,
                    "better_system": result.better,
                    "better_score": result.better_score,
                    "worse_system": result.worse,
                    "worse_score": result.worse_score,
                    "p_value": result.p_value,
                    "significant_at_0.05": result.p_value <= 0.05,
                }
            )
    columns = [
        "group",
        "setting",
        "better_system",
        "better_score",
        "worse_system",
        "worse_score",
        "p_value",
        "significant_at_0.05",
    ]
    return [("rankings", columns, rows)]


def cmd_distribution(args):
    project = _load(args)
    rows = []
    settings = [
        s for s in _settings(args, project) if s in (Setting.MQM, Setting.SXS_MQM)
    ]
    for setting in settings:
        dist = profiling_mod.error_distribution(project, setting, duplicate_rule=True)
        for (category, severity), count in sorted(
            dist.counts.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
        ):
            rows.append(
                {
                    "setting": setting.value,
                    "category": category.value,
                    "severity": severity.value,
                    "count": count,
                    "pct": dist.percentages.get((category, severity), ""),
                }
            )
    return [("distribution", ["setting", "category", "severity", "count", "pct"], rows)]


def cmd_conversion(args):
    project = _load(args)
    matrix = profiling_mod.conversion_matrix(project)
    rows = [
        {
            "mqm_category": a.value,
            "sxs_category": b.value,
            "count": count,
        }
        for (a, b), count in sorted(
            matrix.counts.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
        )
    ]
    return [("conversion", ["mqm_category", "sxs_category", "count"], rows)]


def cmd_outliers(args):
    project = load_project(args.project)
    rows = []
    score_rows = []
    settings = [
        s
        for s in ((Setting(args.setting),) if args.setting else (Setting.MQM, Setting.SXS_MQM))
        if project.has_setting(s)
    ]
    for setting in settings:
        for stats in profiling_mod.annotator_outliers(project, setting):
            rows.append(
                {
                    "setting": setting.value,
                    "annotator": stats.annotator,
                    "error_count": stats.error_count,
                    "z": stats.z,
                    "flagged": stats.flagged,
                }
            )
        export = profiling_mod.score_distribution_export(project, setting)
        for summary in export["annotators"]:
            score_rows.append({"setting": setting.value, **summary})
    return [
        ("outliers", ["setting", "annotator", "error_count", "z", "flagged"], rows),
        (
            "score_distributions",
            ["setting", "annotator", "n", "mean", "median", "q1", "q3"],
            score_rows,
        ),
    ]


def _read_metric_scores(path: str, project: Project):
    scores: dict[str, dict[SegmentRef, float]] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header[:4] != ["system", "doc_id", "seg_id", "score"]:
            raise WorkbenchError("E_BAD_HEADER", f"unexpected metric columns {header}")
        for lineno, line in enumerate(fh, start=2):
            fields = line.rstrip("\n").split("\t")
            if len(fields) < 4:
                raise WorkbenchError("E_ROW_FIELDS", f"metric row {lineno} too short")
            system, doc_id, seg_id, score = fields[:4]
            scores.setdefault(system, {})[SegmentRef(doc_id, seg_id)] = float(score)
    ordered_segments = project.segments
    aligned: dict[str, list[float]] = {}
    for system, per_seg in scores.items():
        aligned[system] = [per_seg[seg] for seg in ordered_segments if seg in per_seg]
    return aligned


def cmd_select_pairs(args):
    project = load_project(args.project)
    metric_scores = _read_metric_scores(args.metric_scores, project)
    systems = sorted(metric_scores)
    outputs = {
        system: [
            project.unit_map[(system, seg)].target
            for seg in project.segments
            if (system, seg) in project.unit_map
        ]
        for system in systems
    }
    selection = ranking_mod.select_pairs(
        systems, metric_scores, outputs, trials=args.trials, seed=args.seed
    )
    rows = []
    chosen = [("top2", selection.top2)]
    chosen += [("high_sim", p) for p in selection.high_sim]
    chosen += [("low_sim", p) for p in selection.low_sim]
    diag = {
        frozenset((d["system_a"], d["system_b"])): d for d in selection.diagnostics
    }
    for group, pair in chosen:
        d = diag[frozenset(pair)]
        rows.append(
            {
                "group": group,
                "system_a": pair[0],
                "system_b": pair[1],
                "rank_a": d["rank_a"] if d["system_a"] == pair[0] else d["rank_b"],
                "rank_b": d["rank_b"] if d["system_a"] == pair[0] else d["rank_a"],
                "p_value": d["p_value"],
                "cross_bleu": d["cross_bleu"],
            }
        )
    diag_rows = list(selection.diagnostics)
    return [
        (
            "selected_pairs",
            ["group", "system_a", "system_b", "rank_a", "rank_b", "p_value", "cross_bleu"],
            rows,
        ),
        (
            "pair_diagnostics",
            ["system_a", "system_b", "rank_a", "rank_b", "p_value", "cross_bleu", "similar_quality"],
            diag_rows,
        ),
    ]


def cmd_assign(args):
    project = load_project(args.project)
    pool = [a for a in args.annotators.split(",") if a]
    assignment = assign_tasks(project, pool, k=args.per_doc, seed=args.seed)
    save_assignment(assignment, args.project)
    rows = [
        {"doc_id": doc_id, "annotators": ",".join(triple)}
        for doc_id, triple in sorted(assignment.doc_triples.items())
    ]
    return [("assignment", ["doc_id", "annotators"], rows)]


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    project = load_project(args.project)
    assignment = load_assignment(project, args.project)
    campaign = Campaign(project, assignment, args.project)
    app = create_app(campaign, static_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_export(args) -> int:
    project = load_project(args.project)
    assignment = load_assignment(project, args.project)
    campaign = Campaign(project, assignment, args.project)
    folded = campaign.export()
    save_project(folded, args.project)
    print(
        f"exported {len(folded.mqm)} error annotations and"
        f" {len(folded.rr)} judgments to {args.project}"
    )
    return 0


REPORT_COMMANDS = {
    "validate": cmd_validate,
    "score": cmd_score,
    "agreement": cmd_agreement,
    "itc": cmd_itc,
    "pra": cmd_pra,
    "rank": cmd_rank,
    "distribution": cmd_distribution,
    "conversion": cmd_conversion,
    "outliers": cmd_outliers,
    "select-pairs": cmd_select_pairs,
    "assign": cmd_assign,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "serve":
            return cmd_serve(args)
        if args.command == "export":
            return cmd_export(args)
        handler = REPORT_COMMANDS[args.command]
        try:
            reports = handler(args)
            failed = None
        except WorkbenchError as exc:
            if exc.code == "E_VALIDATION" and "reports" in exc.detail:
                reports = exc.detail["reports"]
                failed = exc
            else:
                raise
        meta = build_meta(_config(args), args.project)
        for name, columns, rows in reports:
            path = write_report(args.out, name, columns, rows, args.format, meta)
            print(f"wrote {path} ({len(rows)} rows)")
        if failed is not None:
            print(f"{failed.code}: {failed.message}", file=sys.stderr)
            return 1
        return 0
    except WorkbenchError as exc:
        print(f"{exc.code}: {exc.message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
