# src/generators/visual_generator.py
"""
시각화 생성 모듈
matplotlib를 활용한 평면도 SVG (방, 캐리어, 피캐리어, 로봇 경로, 그래프 변화)
"""

from io import BytesIO
from typing import Iterable, List, Optional, Sequence

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt
from matplotlib.patches import Polygon as PolygonPatch, Rectangle

from core.scene_graph import CarrierRelationshipSceneGraph
from simworld.world import WorldModel

# 결정적 SVG 출력
plt.rcParams['svg.hashsalt'] = 'crsg-render'
plt.rcParams['svg.fonttype'] = 'none'
plt.rcParams['axes.unicode_minus'] = False

# 그래프 변화 표시 색: 등장 빨강, 사라짐 파랑, 재연결 초록
DELTA_COLORS = {'added': 'red', 'removed': 'blue', 'relinked': 'green'}
DELTA_MARK = 0.2


class WorldRenderer:
    """평면도 렌더러"""

    def __init__(self, dpi: int = 100, scale: float = 1.2):
        self.dpi = dpi
        self.scale = scale

    def render(
        self,
        world: WorldModel,
        graph: Optional[CarrierRelationshipSceneGraph] = None,
        trace_records: Iterable[dict] = (),
    ) -> bytes:
        records = list(trace_records)
        walls = world.walls
        x0, y0 = walls.origin.x, walls.origin.y
        x1 = x0 + walls.width * walls.resolution
        y1 = y0 + walls.height * walls.resolution

        fig, ax = plt.subplots(figsize=((x1 - x0) * self.scale, (y1 - y0) * self.scale), dpi=self.dpi)

        ax.imshow(
            walls.cells,
            origin='lower',
            extent=(x0, x1, y0, y1),
            cmap='Greys',
            vmin=0,
            vmax=1.5,
            interpolation='nearest',
        )
        for room in sorted(world.rooms, key=lambda r: r.id):
            ax.add_patch(PolygonPatch(
                [(v.x, v.y) for v in room.vertices],
                closed=True, fill=False, edgecolor='tab:gray', linestyle='--', linewidth=0.8,
            ))
            c = room.shape.centroid
            ax.text(c.x, c.y, room.name or room.id, ha='center', va='center', fontsize=7, color='tab:gray')

        self._draw_objects(ax, world, graph)
        self._draw_paths(ax, records)
        self._draw_deltas(ax, records)

        ax.set_xlim(x0, x1)
        ax.set_ylim(y0, y1)
        ax.set_aspect('equal')
        ax.axis('off')
        return self._fig_to_svg(fig)

    def _draw_objects(self, ax, world: WorldModel, graph: Optional[CarrierRelationshipSceneGraph]):
        carriers = set(graph.carriers) if graph is not None else {
            c for c in world.carrier_of.values() if c is not None
        }
        for obj_id in sorted(world.objects):
            obj = world.objects[obj_id]
            box = obj.aabb
            rgb = [v / 255.0 for v in obj.appearance.mean_color()]
            if obj_id in carriers:
                patch = Rectangle(
                    (box.min.x, box.min.y), box.max.x - box.min.x, box.max.y - box.min.y,
                    facecolor=rgb, edgecolor='black', linewidth=0.8, alpha=0.6,
                )
            elif world.carrier_of.get(obj_id) is not None:
                patch = Rectangle(
                    (box.min.x, box.min.y), box.max.x - box.min.x, box.max.y - box.min.y,
                    facecolor=rgb, edgecolor='black', linewidth=0.4,
                )
            else:
                patch = Rectangle(
                    (box.min.x, box.min.y), box.max.x - box.min.x, box.max.y - box.min.y,
                    facecolor='lightgray', edgecolor='dimgray', hatch='//', linewidth=0.5,
                )
            ax.add_patch(patch)
            if obj_id in carriers:
                ax.text(box.center.x, box.center.y, obj.label, ha='center', va='center', fontsize=5)

    def _draw_paths(self, ax, records: List[dict]):
        cmap = plt.get_cmap('tab10')
        task = 0
        for rec in records:
            if rec.get('final'):
                task += 1
                continue
            path = rec.get('path') or []
            if len(path) < 2:
                continue
            xs = [p[0] for p in path]
            ys = [p[1] for p in path]
            ax.plot(xs, ys, color=cmap(task % 10), linewidth=1.2)
            ax.plot(xs[0], ys[0], marker='o', markersize=2.5, color=cmap(task % 10))

    def _draw_deltas(self, ax, records: List[dict]):
        for rec in records:
            delta = rec.get('graph_delta')
            if not delta:
                continue
            relinked = set(delta.get('relinked', []))
            entries = [('removed', e) for e in delta.get('removed', [])]
            entries += [('relinked' if e['id'] in relinked else 'added', e) for e in delta.get('added', [])]
            for kind, entry in entries:
                x, y = entry['xy']
                ax.add_patch(Rectangle(
                    (x - DELTA_MARK / 2, y - DELTA_MARK / 2), DELTA_MARK, DELTA_MARK,
                    fill=False, edgecolor=DELTA_COLORS[kind], linewidth=1.0,
                ))

    def _fig_to_svg(self, fig) -> bytes:
        """matplotlib figure를 SVG 바이트로 변환"""
        buf = BytesIO()
        fig.savefig(buf, format='svg', bbox_inches='tight', facecolor='white', edgecolor='none', metadata={'Date': None})
        plt.close(fig)
        return buf.getvalue()


def render_svg(
    world: WorldModel,
    graph: Optional[CarrierRelationshipSceneGraph] = None,
    trace_records: Sequence[dict] = (),
) -> bytes:
    return WorldRenderer().render(world, graph, trace_records)
