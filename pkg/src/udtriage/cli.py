"""Command-line interface: triage init|queue|annotate|adjudicate|export|dashboard|eval|round|serve."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .adjudication import ProjectStore, Status
from .agreement import FeatureKind, agreement_report, correction_report
from .conllu import parse_conllu_file, serialize_conllu
from .evaluation import evaluate
from .rounds import RoundConfig, RoundOrchestrator, side_resolver
from .taxonomy import TaxonomyTable, deprel_category_histogram

STORE_ENV_VAR = "TRIAGE_STORE"


def _store_root(value: str | None) -> Path:
    root = value or os.environ.get(STORE_ENV_VAR)
    if root is None:
        sys.exit(f"no store path: pass --root or set {STORE_ENV_VAR}")
    return Path(root)


def cmd_init(args) -> int:
    corpus_a = parse_conllu_file(args.parser_a, "parser_a")
    corpus_b = parse_conllu_file(args.parser_b, "parser_b")
    project_id = args.project_id or Path(args.project_dir).name
    store = ProjectStore.create(args.project_dir, project_id, corpus_a, corpus_b)
    burndown = store.burndown()
    store.close()
    print(f"project {project_id}: {burndown['total']} review items queued")
    return 0


def cmd_queue(args) -> int:
    store = ProjectStore.open(args.project_dir)
    status = Status(args.status) if args.status else None
    feature = FeatureKind(args.feature.upper()) if args.feature else None
    views, total = store.queue_page(
        role=args.role, status=status, feature=feature, page=args.page, page_size=args.page_size
    )
    store.close()
    if args.json:
        print(json.dumps({"items": views, "total": total}, ensure_ascii=False, indent=2))
        return 0
    print(f"{total} items (page {args.page}, {len(views)} shown)")
    for view in views:
        record = view["record"]
        print(
            f"{record['record_id']}\t{view['status']}\t"
            f"{record['value_a']!r} vs {record['value_b']!r}"
        )
    return 0


def cmd_annotate(args) -> int:
    store = ProjectStore.open(args.project_dir)
    view = store.submit_annotation(args.item_id, args.role, args.label, args.idempotency_key)
    store.close()
    print(f"{args.item_id} -> {view['status']}")
    return 0


def cmd_adjudicate(args) -> int:
    store = ProjectStore.open(args.project_dir)
    view = store.submit_adjudication(args.item_id, args.label, args.idempotency_key)
    store.close()
    print(f"{args.item_id} -> {view['status']}")
    return 0


def cmd_export(args) -> int:
    store = ProjectStore.open(args.project_dir)
    gold, violations = store.export_gold(partial=args.partial)
    store.close()
    text = serialize_conllu(gold)
    if args.output:
        Path(args.output).write_bytes(text.encode("utf-8"))
    else:
        sys.stdout.write(text)
    for violation in violations:
        print(f"warning: {violation}", file=sys.stderr)
    return 0


def cmd_dashboard(args) -> int:
    store = ProjectStore.open(args.project_dir)
    report = agreement_report(store.corpus_a, store.corpus_b)
    total_tokens = store.aligned_token_total()
    human = correction_report(store.correction_events("human"), total_tokens)
    adjudicated = correction_report(store.correction_events("adjudicated"), total_tokens)
    histogram = deprel_category_histogram(
        store.records_for(FeatureKind.DEPREL), TaxonomyTable.default()
    )
    burndown = store.burndown()
    store.close()
    if args.json:
        payload = {
            "agreement": report.to_rows(),
            "human_corrections": human.to_rows(),
            "adjudicator_corrections": adjudicated.to_rows(),
            "deprel_categories": {cat.value: count for cat, count in histogram.items()},
            "burndown": burndown,
        }
        print(json.dumps(payload, ensure_ascii=False, indent=2))
        return 0
    print("== Parser agreement ==")
    print(report.format_table())
    print()
    print(f"== Corrections (of {total_tokens} aligned tokens) ==")
    for row in human.to_rows():
        print(f"{row['feature']:<8}{row['corrected']:>8}{row['rate']:>8}")
    print()
    print("== Adjudicator corrections ==")
    for row in adjudicated.to_rows():
        print(f"{row['feature']:<8}{row['corrected']:>8}{row['rate']:>8}")
    print()
    print("== DEPREL disagreement categories ==")
    for category, count in histogram.items():
        print(f"{category.value:<24}{count:>6}")
    print()
    print(f"== Queue ==\nremaining {burndown['remaining']} of {burndown['total']}")
    return 0


def cmd_eval(args) -> int:
    system = parse_conllu_file(args.system, "system")
    gold = parse_conllu_file(args.gold, "gold")
    scores = evaluate(system, gold, base_deprel_only=args.base_deprel)
    print(scores.format_table())
    return 0


def cmd_round(args) -> int:
    config = RoundConfig.from_file(args.config)
    orchestrator = RoundOrchestrator(config)
    if args.action == "status":
        print(json.dumps(orchestrator.status(), ensure_ascii=False, indent=2))
        return 0
    resolver = side_resolver(args.resolve_with) if args.resolve_with else None
    if args.action == "open":
        info = orchestrator.open_round(args.round)
        print(f"round {args.round} open: {info['burndown']['total']} items to review")
        return 0
    if args.action == "close":
        log = orchestrator.close_round(args.round, resolver=resolver)
    else:  # run
        log = orchestrator.run_round(args.round, resolver=resolver)
    print(json.dumps(log.to_payload(), ensure_ascii=False, indent=2))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(_store_root(args.root), console_dir=args.console)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="triage", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a project from two parser outputs")
    p.add_argument("project_dir")
    p.add_argument("--parser-a", required=True)
    p.add_argument("--parser-b", required=True)
    p.add_argument("--project-id")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("queue", help="list review items")
    p.add_argument("project_dir")
    p.add_argument("--role", default="observer")
    p.add_argument("--status", choices=[s.value for s in Status])
    p.add_argument("--feature", choices=[f.value for f in FeatureKind])
    p.add_argument("--page", type=int, default=1)
    p.add_argument("--page-size", type=int, default=50)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_queue)

    p = sub.add_parser("annotate", help="submit an annotator label")
    p.add_argument("project_dir")
    p.add_argument("item_id")
    p.add_argument("--role", required=True, choices=["annotator1", "annotator2"])
    p.add_argument("--label", required=True)
    p.add_argument("--idempotency-key")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("adjudicate", help="submit the adjudicator's label")
    p.add_argument("project_dir")
    p.add_argument("item_id")
    p.add_argument("--label", required=True)
    p.add_argument("--idempotency-key")
    p.set_defaults(func=cmd_adjudicate)

    p = sub.add_parser("export", help="export the gold corpus")
    p.add_argument("project_dir")
    p.add_argument("-o", "--output")
    p.add_argument("--partial", action="store_true", help="export with unresolved tokens marked")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("dashboard", help="agreement, corrections, categories, burn-down")
    p.add_argument("project_dir")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_dashboard)

    p = sub.add_parser("eval", help="score a system corpus against gold")
    p.add_argument("system")
    p.add_argument("gold")
    p.add_argument("--base-deprel", action="store_true", help="compare base relations for LAS")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("round", help="drive an annotation round")
    p.add_argument("action", choices=["open", "close", "run", "status"])
    p.add_argument("--config", required=True)
    p.add_argument("--round", type=int)
    p.add_argument("--resolve-with", choices=["a", "b", "A", "B"],
                   help="auto-resolve the queue by adopting one parser's values")
    p.set_defaults(func=cmd_round)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--root", help=f"projects directory (default ${STORE_ENV_VAR})")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8400)
    p.add_argument("--console", help="directory with the built review console")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "command", None) == "round" and args.action != "status" and args.round is None:
        sys.exit("round open/close/run need --round")
    try:
        return args.func(args)
    except BrokenPipeError:
        return 0
    except Exception as exc:  # surfaced as a message, not a traceback
        sys.exit(f"error: {exc}")


if __name__ == "__main__":
    sys.exit(main())
