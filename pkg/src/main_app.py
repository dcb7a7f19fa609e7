# src/main_app.py
"""
CRSG 내비게이션 명령행 애플리케이션
build / run / query / render / bench / query-bench / generate
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from config.config import Config
from core.exceptions import CRSGError
from core.graph_io import load_graph
from core.navigation import Mode
from core.scene_graph import layer_counts, query
from generators.scene_generator import generate_scene, load_suite
from generators.visual_generator import render_svg
from output.file_manager import FileManager
from providers.factory import create_providers
from simworld.bench import (
    TASK_COLUMNS,
    SequenceJob,
    accuracy_by_kind,
    bench_frames,
    bench_jobs,
    prepare_scene,
    query_bench,
    report_for,
    run_jobs,
)
from utils.utils import setup_logging

logger = logging.getLogger(__name__)

DEFAULT_BENCH_MODES = ['full', 'no-update', 'only-carriers-random', 'only-carriers-llm']


def _read(path: Optional[str]) -> Optional[str]:
    return None if path is None else Path(path).read_text(encoding='utf-8')


def _remote_flag(args) -> Optional[bool]:
    return False if getattr(args, 'mock', False) else None


def cmd_build(args) -> int:
    """오프라인 CRSG 구축 후 저장"""
    prepared = prepare_scene(_read(args.scene), use_remote=_remote_flag(args))
    out = Path(args.out)
    FileManager(out.parent).write_graph(prepared.graph, out.name)
    counts = layer_counts(prepared.graph)
    print(f"{counts['carriers']} carriers / {counts['carried']} carried / {counts['others']} others")
    return 0


def cmd_run(args) -> int:
    """과제 시퀀스 실행 -> trace.jsonl, metrics.csv, graph_after.json"""
    mode = Mode.parse(args.mode)
    if mode.is_random and args.seed is None:
        raise ValueError(f"{mode.value} 모드에는 --seed 가 필요함")
    seed = 0 if args.seed is None else args.seed
    if args.sequences < 1:
        raise ValueError("--sequences >= 1")

    scene_text = _read(args.scene)
    graph_text = _read(args.graph)
    jobs = [
        SequenceJob(scene_text, mode.value, seed + i, scene=args.scene, sequence=i,
                    graph_text=graph_text, use_remote=_remote_flag(args))
        for i in range(args.sequences)
    ]
    results = run_jobs(jobs, args.parallel)

    files = FileManager(args.out)
    if len(results) == 1:
        result = results[0]
        files.write_trace(result.records)
        files.write_metrics(result.rows, columns=TASK_COLUMNS)
        files.write_text(result.final_graph, "graph_after.json")
    else:
        merged_records, merged_rows = [], []
        for result in results:
            seq = result.job.sequence
            files.write_trace(result.records, f"trace_seq{seq}.jsonl")
            files.write_text(result.final_graph, f"graph_after_seq{seq}.json")
            merged_records.extend(result.records)
            merged_rows.extend({'sequence': seq, **row} for row in result.rows)
        files.write_trace(merged_records)
        files.write_metrics(merged_rows, columns=['sequence'] + TASK_COLUMNS)

    report = report_for(results)
    files.write_text(json.dumps(report.to_record(), ensure_ascii=False, sort_keys=True, indent=1) + "\n", "summary.json")
    print(f"mode={mode.value} SR={report.sr:.3f} SPL={report.spl_mean:.3f} Tasks_SR={[round(v, 3) for v in report.tasks_sr]}")
    return 0


def cmd_query(args) -> int:
    """자유 문장 질의 결과 출력"""
    if args.graph:
        graph = load_graph(args.graph)
        providers = create_providers(use_remote=_remote_flag(args))
    elif args.scene:
        prepared = prepare_scene(_read(args.scene), use_remote=_remote_flag(args))
        graph, providers = prepared.graph, prepared.providers
    else:
        raise ValueError("--graph 또는 --scene 이 필요함")
    for rank, (obj_id, score) in enumerate(query(graph, args.text, args.top_k, providers, args.feature), 1):
        print(f"{rank}\t{obj_id}\t{score:.4f}")
    return 0


def cmd_render(args) -> int:
    """평면도 SVG (trace가 있으면 경로와 그래프 변화 포함)"""
    prepared = prepare_scene(_read(args.scene), _read(args.graph), use_remote=_remote_flag(args))
    records = FileManager.read_trace(args.trace) if args.trace else []
    out = Path(args.out)
    FileManager(out.parent).write_bytes(render_svg(prepared.world, prepared.graph, records), out.name)
    print(f"저장: {out}")
    return 0


def cmd_bench(args) -> int:
    """suite x 모드 x 시드 장기 과제 벤치마크"""
    suite = load_suite(args.suite)
    modes = [Mode.parse(m.strip()).value for m in args.modes.split(',') if m.strip()]
    seeds = list(range(args.seed, args.seed + args.seeds))
    results = run_jobs(bench_jobs(suite, modes, seeds, _remote_flag(args)), args.parallel)
    bench, summary = bench_frames(results)
    FileManager(args.out).write_bench(bench, summary)
    overall = summary[summary['task_idx'] == 'all']
    for _, row in overall.iterrows():
        print(f"{row['mode']:<22} SR={row['sr']:.3f} SPL={row['spl']:.3f}")
    return 0


def cmd_query_bench(args) -> int:
    """suite 장면 queries의 kind별 top-1 정확도"""
    suite = load_suite(args.suite)
    results = query_bench(suite, _remote_flag(args), args.seed)
    FileManager(args.out).write_csv(results, "query_bench.csv")
    for kind, acc in sorted(accuracy_by_kind(results).items()):
        print(f"{kind:<10} top-1={acc:.3f}")
    return 0


def cmd_generate(args) -> int:
    """생성 장면 JSON 저장"""
    doc = generate_scene(args.seed, args.rooms, args.distractors, args.tasks)
    out = Path(args.out)
    FileManager(out.parent).write_text(json.dumps(doc, ensure_ascii=False, indent=1, sort_keys=True) + "\n", out.name)
    print(f"저장: {out} ({len(doc['objects'])} objects, {len(doc['tasks'])} tasks)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='crsg-nav', description='CRSG 기반 이동 물체 탐색')
    parser.add_argument('--verbose', action='store_true', help='DEBUG 로그')
    parser.add_argument('--mock', action='store_true', help='환경변수와 관계없이 mock provider 사용')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('build', help='오프라인 CRSG 구축')
    p.add_argument('--scene', required=True)
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser('run', help='과제 시퀀스 실행')
    p.add_argument('--scene', required=True)
    p.add_argument('--graph')
    p.add_argument('--mode', default='full', help=', '.join(Config.MODES))
    p.add_argument('--seed', type=int)
    p.add_argument('--out', required=True)
    p.add_argument('--sequences', type=int, default=1, help='seed, seed+1, ... 로 반복할 시퀀스 수')
    p.add_argument('--parallel', type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser('query', help='그래프 질의')
    p.add_argument('--graph')
    p.add_argument('--scene')
    p.add_argument('--text', required=True)
    p.add_argument('--top-k', type=int, default=5)
    p.add_argument('--feature', choices=['text', 'visual'], default='text')
    p.set_defaults(func=cmd_query)

    p = sub.add_parser('render', help='평면도 SVG')
    p.add_argument('--scene', required=True)
    p.add_argument('--graph')
    p.add_argument('--trace')
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser('bench', help='장기 과제 벤치마크')
    p.add_argument('--suite', required=True)
    p.add_argument('--modes', default=','.join(DEFAULT_BENCH_MODES))
    p.add_argument('--seeds', type=int, default=20)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out', required=True)
    p.add_argument('--parallel', type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser('query-bench', help='질의 정확도 벤치마크')
    p.add_argument('--suite', required=True)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_query_bench)

    p = sub.add_parser('generate', help='장면 생성')
    p.add_argument('--seed', type=int, required=True)
    p.add_argument('--rooms', type=int, default=3)
    p.add_argument('--tasks', type=int, default=5)
    p.add_argument('--distractors', action='store_true')
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(debug=args.verbose)
    try:
        return args.func(args)
    except (CRSGError, ValueError, OSError) as e:
        logger.debug("명령 실패", exc_info=True)
        print(f"오류: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
