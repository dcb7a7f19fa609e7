# src/output/__init__.py
"""
출력 및 파일 생성 패키지
"""

from .file_manager import FileManager
from .report_charts import create_spl_curves

__all__ = ['FileManager', 'create_spl_curves']
