# src/simworld/__init__.py
"""
시뮬레이션 월드 패키지 (장면, 센서, 에피소드, 지표)
"""

from .world import WorldModel, load_scene, apply_displacements, sense, approach_point, approach_distance, world_hash
from .metrics import spl, compute_metrics, MetricsReport
from .episode import EpisodeTrace, RunParams, run_episode
from .runner import run_sequence

__all__ = [
    'WorldModel',
    'load_scene',
    'apply_displacements',
    'sense',
    'approach_point',
    'approach_distance',
    'world_hash',
    'spl',
    'compute_metrics',
    'MetricsReport',
    'EpisodeTrace',
    'RunParams',
    'run_episode',
    'run_sequence',
]
