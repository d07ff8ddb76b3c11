"""Command-line pipeline: generate, balance, bias, summarize, oracle,
evaluate, parse-question.

All outputs are written atomically (temp file + rename). Given the same
manifest, config and seed the outputs are byte-identical across runs and
across worker counts.
"""

from __future__ import annotations

import argparse
import json
import multiprocessing
import sys
from collections import Counter
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import balance as balance_mod
from . import bias as bias_mod
from . import evalmetrics, figures
from .io import (
    JsonlError,
    RunConfig,
    atomic_write,
    load_manifest,
    read_jsonl,
    write_jsonl,
    write_text,
)
from .questions import (
    StructuredQuestion,
    enumerate_candidates,
    oracle_answer,
    render_answers,
    to_record,
)
from .raster import Nomenclature, RasterError, class_stats, load_map
from .summary import render_explanation, render_summary
from .templates import TemplateError, load_registry, match_question

_QA_FIELDS = ("question_id", "image_id", "qtype", "question", "answers", "cells")
_PRED_FIELDS = ("question_id", "answers", "cells")

_WORKER: dict = {}


def _init_worker(cfg: dict) -> None:
    _WORKER["cfg"] = cfg
    _WORKER["nomenclature"] = Nomenclature.load(cfg["nomenclature"])
    _WORKER["registry"] = load_registry(cfg["templates"])


def _generate_one(entry: tuple[str, str, str]) -> list[str]:
    image_id, path, split = entry
    cfg = _WORKER["cfg"]
    nomen = _WORKER["nomenclature"]
    smap = load_map(path, image_id, cfg["grid"], nomen)
    stats = class_stats(smap, nomen.n_categories, cfg["grid"])
    instances = enumerate_candidates(
        stats,
        _WORKER["registry"],
        nomen,
        cfg["seed"],
        split=split,
        presence_threshold=cfg["presence_threshold"],
        cell_threshold=cfg["cell_threshold"],
        qtypes=tuple(cfg["qtypes"]),
        direction_policy=cfg["direction_policy"],
    )
    return [
        json.dumps(to_record(inst, nomen), ensure_ascii=False, sort_keys=True)
        for inst in instances
    ]


def cmd_generate(args) -> int:
    cfg = RunConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    cfg_dict = asdict(cfg)
    entries = sorted(load_manifest(args.manifest), key=lambda e: e.image_id)
    tasks = [(e.image_id, e.path, e.split) for e in entries]
    n = 0
    with atomic_write(args.out) as fh:
        if args.workers > 1:
            with multiprocessing.Pool(args.workers, _init_worker, (cfg_dict,)) as pool:
                for lines in pool.imap(_generate_one, tasks, chunksize=8):
                    for line in lines:
                        fh.write(line + "\n")
                        n += 1
        else:
            _init_worker(cfg_dict)
            for task in tasks:
                for line in _generate_one(task):
                    fh.write(line + "\n")
                    n += 1
    print(f"wrote {n} candidate instances for {len(tasks)} images to {args.out}")
    return 0


def cmd_balance(args) -> int:
    plan = balance_mod.compute_plan(
        read_jsonl(args.input, _QA_FIELDS), args.seed, pool_subtypes=not args.per_subtype
    )
    n = write_jsonl(args.out, balance_mod.apply_plan(read_jsonl(args.input, _QA_FIELDS), plan))
    if args.audit:
        write_text(args.audit, json.dumps(balance_mod.audit(plan), indent=2, ensure_ascii=False))
    total_before = sum(plan.before.values())
    print(f"kept {n} of {total_before} instances -> {args.out}")
    return 0


def cmd_bias(args) -> int:
    report = bias_mod.bias_report(read_jsonl(args.input, _QA_FIELDS))
    write_text(args.out, bias_mod.to_tsv(report))
    if args.json:
        write_text(args.json, bias_mod.to_json(report))
    if args.figures:
        stem = Path(args.out).with_suffix("")
        figures.save_bias_figure(report, f"{stem}_scores.png")
        counts: Counter = Counter()
        for rec in read_jsonl(args.input, _QA_FIELDS):
            counts.update(rec["answers"])
        figures.save_answer_histogram(counts, f"{stem}_answers.png")
    print(f"wrote bias report ({len(report.rows)} rows) to {args.out}")
    return 0


def cmd_summarize(args) -> int:
    nomen = Nomenclature.load(args.nomenclature)
    smap = load_map(args.raster, args.image_id or Path(args.raster).stem, args.grid, nomen)
    stats = class_stats(smap, nomen.n_categories, args.grid)
    text = render_summary(stats, nomen, args.presence_threshold, args.cell_threshold)
    if args.out:
        write_text(args.out, text + "\n")
    else:
        print(text)
    return 0


_CLI_QTYPES = {
    "presence": "presence",
    "landcover": "landcover",
    "area": "area",
    "comp_absolute": "comp_absolute",
    "comp_relative_class": "comp_relative_class",
    "comp_relative_yesno": "comp_relative_yesno",
}


def _structured_from_args(args, nomen: Nomenclature) -> StructuredQuestion:
    if args.qtype not in _CLI_QTYPES:
        raise TemplateError(f"unknown qtype {args.qtype!r}")
    return StructuredQuestion(
        qtype=_CLI_QTYPES[args.qtype],
        class_a=nomen.id_of(args.class_a) if args.class_a else None,
        class_b=nomen.id_of(args.class_b) if args.class_b else None,
        direction=args.direction,
    )


def cmd_oracle(args) -> int:
    nomen = Nomenclature.load(args.nomenclature)
    smap = load_map(args.raster, args.image_id or Path(args.raster).stem, args.grid, nomen)
    stats = class_stats(smap, nomen.n_categories, args.grid)

    matches = []
    if args.question:
        registry = load_registry(args.templates)
        matches = match_question(registry, args.question, nomen)
        if not matches:
            print(f"error: no template matches question {args.question!r}", file=sys.stderr)
            return 1
        tid, binding = matches[0]
        template = registry.get(tid)
        sq = StructuredQuestion(
            qtype=template.qtype,
            class_a=nomen.id_of(binding.class_a) if binding.class_a else None,
            class_b=nomen.id_of(binding.class_b) if binding.class_b else None,
            direction=binding.direction,
            template_id=tid,
            text=args.question,
        )
    else:
        sq = _structured_from_args(args, nomen)

    answers, cells = oracle_answer(stats, sq, nomen, args.presence_threshold, args.cell_threshold)
    rendered = render_answers(answers, nomen)
    out = {
        "qtype": sq.qtype,
        "class_a": nomen.name(sq.class_a) if sq.class_a is not None else None,
        "class_b": nomen.name(sq.class_b) if sq.class_b is not None else None,
        "direction": sq.direction,
        "template_id": sq.template_id,
        "answers": rendered,
        "cells": [c.label for c in sorted(cells)],
        "explanation": render_explanation(cells, rendered, args.grid),
        "ambiguous_matches": max(len(matches) - 1, 0),
    }
    print(json.dumps(out, indent=2, ensure_ascii=False))
    return 0


def cmd_evaluate(args) -> int:
    gt = list(read_jsonl(args.gt, _QA_FIELDS))
    preds = list(read_jsonl(args.pred, _PRED_FIELDS))
    vqa = evalmetrics.vqa_metrics(preds, gt)
    cells = evalmetrics.cell_metrics(preds, gt)
    if len(preds) >= 2:
        corr = evalmetrics.cell_correlation(
            [{_cell_index(c, args.grid) for c in p["cells"]} for p in preds], args.grid
        )
        cells = evalmetrics.CellReport(cells.micro_f1, cells.precision, cells.recall, corr)

    seg = None
    cm = None
    if args.seg_manifest:
        pairs = json.loads(Path(args.seg_manifest).read_text(encoding="utf-8"))
        nomen = Nomenclature.load(args.nomenclature)
        k = nomen.n_categories
        cm = np.zeros((k, k), dtype=np.int64)
        base = Path(args.seg_manifest).parent
        for pair in pairs:
            gt_map = load_map(str(base / pair["gt"]), "gt", args.grid)
            pred_map = load_map(str(base / pair["pred"]), "pred", args.grid)
            evalmetrics.confusion_accumulate(cm, gt_map.data, pred_map.data)
        seg = evalmetrics.seg_metrics(cm, include_absent=args.include_absent_classes)

    write_text(f"{args.out}.json", evalmetrics.reports_to_json(vqa, cells, seg))
    write_text(f"{args.out}.tsv", evalmetrics.reports_to_tsv(vqa, cells, seg))
    if args.figures:
        figures.save_vqa_figure(vqa, f"{args.out}_vqa.png")
        figures.save_cell_figure(cells, f"{args.out}_cells.png")
        if cm is not None:
            figures.save_confusion_figure(cm, f"{args.out}_confusion.png", seg)
    print(f"wrote evaluation reports to {args.out}.json / {args.out}.tsv")
    return 0


def _cell_index(label: str, grid: int) -> int:
    from .raster import CellId

    return CellId.parse(label, grid).index


def cmd_parse_question(args) -> int:
    nomen = Nomenclature.load(args.nomenclature)
    registry = load_registry(args.templates)
    matches = match_question(registry, args.text, nomen)
    out = [
        {
            "template_id": tid,
            "qtype": registry.get(tid).qtype,
            "class_a": b.class_a,
            "class_b": b.class_b,
            "direction": b.direction,
        }
        for tid, b in matches
    ]
    print(json.dumps(out, indent=2, ensure_ascii=False))
    return 0


def _add_raster_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nomenclature", default=RunConfig().nomenclature)
    p.add_argument("--grid", type=int, default=4)
    p.add_argument("--presence-threshold", type=int, default=30)
    p.add_argument("--cell-threshold", type=int, default=30)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridvqa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="enumerate candidate QA instances from a raster manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("balance", help="subsample a candidate stream to the balancing targets")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--audit", default=None)
    p.add_argument("--per-subtype", action="store_true", help="balance comparison subtypes separately")
    p.add_argument("--workers", type=int, default=1, help="accepted for symmetry; output is identical")
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("bias", help="answer/cell distribution bias report")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True, help="TSV output path")
    p.add_argument("--json", default=None)
    p.add_argument("--no-figures", dest="figures", action="store_false")
    p.set_defaults(func=cmd_bias)

    p = sub.add_parser("summarize", help="render the cell-level text summary of a raster")
    p.add_argument("--raster", required=True)
    p.add_argument("--image-id", default=None)
    p.add_argument("--out", default=None)
    _add_raster_opts(p)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("oracle", help="answer a question about a raster by pixel counting")
    p.add_argument("--raster", required=True)
    p.add_argument("--image-id", default=None)
    p.add_argument("--question", default=None, help="free-text question (matched against templates)")
    p.add_argument("--qtype", default=None, help="structured alternative to --question")
    p.add_argument("--class-a", default=None)
    p.add_argument("--class-b", default=None)
    p.add_argument("--direction", default=None)
    p.add_argument("--templates", default=RunConfig().templates)
    _add_raster_opts(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("evaluate", help="score a prediction file against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out", required=True, help="output prefix (writes <out>.json and <out>.tsv)")
    p.add_argument("--seg-manifest", default=None, help="JSON list of {gt, pred} PGM path pairs")
    p.add_argument("--include-absent-classes", action="store_true")
    p.add_argument("--no-figures", dest="figures", action="store_false")
    _add_raster_opts(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("parse-question", help="reverse-match a question against the template grammar")
    p.add_argument("--text", required=True)
    p.add_argument("--templates", default=RunConfig().templates)
    p.add_argument("--nomenclature", default=RunConfig().nomenclature)
    p.set_defaults(func=cmd_parse_question)

    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "oracle" and not args.question and not args.qtype:
        print("error: oracle needs --question or --qtype", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (RasterError, TemplateError, JsonlError, evalmetrics.EvalError, bias_mod.BiasError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
