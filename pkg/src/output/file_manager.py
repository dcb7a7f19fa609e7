# src/output/file_manager.py
"""
파일 관리 모듈
trace JSONL, 지표 CSV, 그래프 문서, 벤치마크 결과 저장
"""

import json
import logging
from pathlib import Path
from typing import Iterable, List, Sequence, Union

import pandas as pd

from core.graph_io import save_graph
from core.scene_graph import CarrierRelationshipSceneGraph
from output.report_charts import create_spl_curves

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.4f'


class FileManager:
    """출력 디렉터리 아래 결과 파일 생성"""

    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.out_dir / name

    @staticmethod
    def trace_text(records: Iterable[dict]) -> str:
        """한 줄에 한 레코드, 키 정렬"""
        return "".join(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n" for rec in records)

    def write_trace(self, records: Iterable[dict], name: str = "trace.jsonl") -> Path:
        path = self.path(name)
        path.write_text(self.trace_text(records), encoding='utf-8')
        logger.debug(f"trace 저장: {path}")
        return path

    @staticmethod
    def read_trace(path: Union[str, Path]) -> List[dict]:
        lines = Path(path).read_text(encoding='utf-8').splitlines()
        return [json.loads(line) for line in lines if line.strip()]

    def write_csv(self, frame: pd.DataFrame, name: str) -> Path:
        path = self.path(name)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        logger.debug(f"CSV 저장: {path} ({len(frame)} rows)")
        return path

    def write_metrics(self, rows: Sequence[dict], name: str = "metrics.csv", columns: Sequence[str] = None) -> Path:
        return self.write_csv(pd.DataFrame(list(rows), columns=columns), name)

    def write_graph(self, graph: CarrierRelationshipSceneGraph, name: str = "graph.json") -> Path:
        path = self.path(name)
        save_graph(graph, path)
        return path

    def write_text(self, text: str, name: str) -> Path:
        path = self.path(name)
        path.write_text(text, encoding='utf-8')
        return path

    def write_bytes(self, data: bytes, name: str) -> Path:
        path = self.path(name)
        path.write_bytes(data)
        return path

    def write_bench(self, bench: pd.DataFrame, summary: pd.DataFrame) -> List[Path]:
        """bench.csv, summary.csv, spl_curves.html"""
        paths = [self.write_csv(bench, "bench.csv"), self.write_csv(summary, "summary.csv")]
        html = create_spl_curves(summary)
        paths.append(self.write_text(html, "spl_curves.html"))
        return paths
