# src/output/report_charts.py
"""
벤치마크 차트 모듈
plotly를 활용한 과제 순서별 평균 SPL 곡선
"""

import pandas as pd
import plotly.express as px


def spl_curve_frame(summary: pd.DataFrame) -> pd.DataFrame:
    """summary.csv 형식에서 과제별 행만 (task_idx 숫자)"""
    per_task = summary[summary['task_idx'] != 'all'].copy()
    per_task['task_idx'] = per_task['task_idx'].astype(int)
    return per_task.sort_values(['mode', 'task_idx'])


def create_spl_curves(summary: pd.DataFrame) -> str:
    """모드별 SPL 곡선 HTML"""
    frame = spl_curve_frame(summary)
    fig = px.line(
        frame,
        x='task_idx',
        y='spl',
        color='mode',
        markers=True,
        title='과제 순서별 평균 SPL',
        labels={'task_idx': 'task index', 'spl': 'mean SPL', 'mode': 'mode'},
    )
    fig.update_yaxes(range=[0, 1])
    fig.update_xaxes(dtick=1)
    return fig.to_html(include_plotlyjs='cdn', full_html=True, div_id='spl-curves')
