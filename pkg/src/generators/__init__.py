# src/generators/__init__.py
"""
장면 생성 및 시각화 패키지
"""

from .scene_generator import generate_scene, load_suite
from .visual_generator import WorldRenderer, render_svg

__all__ = ['generate_scene', 'load_suite', 'WorldRenderer', 'render_svg']
