# src/core/navigation.py
"""
내비게이션 정책 모듈
MDP 상태/행동, 우선순위 점수, 고정 정책, 상태 전이, 목표 판정
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from config.config import Config
from core.exceptions import ProviderError
from core.features import Swatch, cosine_similarity, histogram_similarity, rgb_histogram
from core.geometry import Pose, Vec3
from core.scene_graph import CarrierRelationshipSceneGraph, command_text, embed_command, rank_by_similarity
from providers.base import Providers
from utils.utils import apply_overrides

logger = logging.getLogger(__name__)


class Mode(str, Enum):
    FULL = 'full'
    ONLY_CARRIERS_RANDOM = 'only-carriers-random'
    ONLY_CARRIERS_LLM = 'only-carriers-llm'
    NO_UPDATE = 'no-update'
    WITHOUT_GPT = 'w/o-gpt'
    WITHOUT_TEXT = 'w/o-text'
    WITHOUT_RGB = 'w/o-rgb'

    @property
    def updates_graph(self) -> bool:
        return self is not Mode.NO_UPDATE

    @property
    def carriers_only(self) -> bool:
        return self in (Mode.ONLY_CARRIERS_RANDOM, Mode.ONLY_CARRIERS_LLM)

    @property
    def is_random(self) -> bool:
        return self.value in Config.RANDOM_MODES

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, Mode):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ValueError(f"알 수 없는 mode '{value}' (가능: {', '.join(Config.MODES)})") from None


@dataclass(frozen=True)
class PolicyParams:
    omega1: float = Config.DEFAULT_POLICY['omega1']
    omega2: float = Config.DEFAULT_POLICY['omega2']
    d_tilde1: float = Config.DEFAULT_POLICY['d_tilde1']
    alpha: float = Config.DEFAULT_POLICY['alpha']
    beta: float = Config.DEFAULT_POLICY['beta']
    omega_r_same: float = Config.DEFAULT_POLICY['omega_r_same']
    omega_r_diff: float = Config.DEFAULT_POLICY['omega_r_diff']
    sigma1: float = Config.DEFAULT_POLICY['sigma1']
    same_room_bonus: float = Config.DEFAULT_POLICY['same_room_bonus']

    def __post_init__(self):
        if not (self.alpha > self.beta > 0):
            raise ValueError("alpha > beta > 0 이어야 함")
        if self.d_tilde1 <= 0:
            raise ValueError("d_tilde1 > 0 이어야 함")
        if self.omega_r_diff > self.omega_r_same:
            raise ValueError("omega_r_diff <= omega_r_same 이어야 함")

    @classmethod
    def from_overrides(cls, overrides: Optional[Mapping] = None) -> "PolicyParams":
        return apply_overrides(cls(), overrides)


@dataclass(frozen=True)
class VerificationParams:
    w_text: float = Config.DEFAULT_VERIFICATION['w_text']
    w_gpt: float = Config.DEFAULT_VERIFICATION['w_gpt']
    w_rgb: float = Config.DEFAULT_VERIFICATION['w_rgb']
    theta_text: float = Config.DEFAULT_VERIFICATION['theta_text']
    theta_combo: float = Config.DEFAULT_VERIFICATION['theta_combo']
    gpt_veto: float = Config.DEFAULT_VERIFICATION['gpt_veto']
    use_text: bool = Config.DEFAULT_VERIFICATION['use_text']
    use_gpt: bool = Config.DEFAULT_VERIFICATION['use_gpt']
    use_rgb: bool = Config.DEFAULT_VERIFICATION['use_rgb']

    @classmethod
    def from_overrides(cls, overrides: Optional[Mapping] = None) -> "VerificationParams":
        return apply_overrides(cls(), overrides)

    def for_mode(self, mode: Mode) -> "VerificationParams":
        if mode is Mode.WITHOUT_GPT:
            return replace(self, use_gpt=False)
        if mode is Mode.WITHOUT_TEXT:
            return replace(self, use_text=False)
        if mode is Mode.WITHOUT_RGB:
            return replace(self, use_rgb=False)
        return self


@dataclass(frozen=True)
class CandidateInfo:
    object_id: str
    carrier_id: Optional[str]
    ss: float
    d: float
    d_tilde: float
    room_id: Optional[str]
    position: Vec3

    def __post_init__(self):
        if not (-1.0 - 1e-9 <= self.ss <= 1.0 + 1e-9):
            raise ValueError(f"ss 범위 밖: {self.ss}")
        if self.d < 0:
            raise ValueError(f"d < 0: {self.d}")
        if not self.d_tilde > 0:
            raise ValueError(f"d_tilde <= 0: {self.d_tilde}")

    def to_record(self) -> dict:
        return {
            'id': self.object_id,
            'carrier': self.carrier_id,
            'ss': round(self.ss, 6),
            'd': round(self.d, 6),
            'd_tilde': round(self.d_tilde, 6),
        }


@dataclass(frozen=True)
class NavState:
    pose: Pose
    unexplored_carriers: FrozenSet[str]
    candidates: Tuple[CandidateInfo, ...] = ()
    found: int = 0
    step: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'unexplored_carriers', frozenset(self.unexplored_carriers))
        object.__setattr__(self, 'candidates', tuple(self.candidates))
        if self.found not in (0, 1):
            raise ValueError("found는 0 또는 1")
        for c in self.candidates:
            if c.carrier_id is not None and c.carrier_id not in self.unexplored_carriers:
                raise ValueError(f"후보 '{c.object_id}'의 캐리어 '{c.carrier_id}'가 미탐색 집합에 없음")

    def candidate(self, object_id: str) -> Optional[CandidateInfo]:
        return next((c for c in self.candidates if c.object_id == object_id), None)

    def to_record(self) -> dict:
        return {
            'pose': [round(self.pose.position.x, 4), round(self.pose.position.y, 4), round(self.pose.yaw, 6)],
            'unexplored': sorted(self.unexplored_carriers),
            'candidates': [c.to_record() for c in sorted(self.candidates, key=lambda c: c.object_id)],
            'found': self.found,
            'step': self.step,
        }


class ActionKind(str, Enum):
    STOP = 'stop'
    EXPLORE = 'explore'
    GOTO = 'goto'


@dataclass(frozen=True)
class NavAction:
    kind: ActionKind
    arg: Optional[str] = None

    @classmethod
    def stop(cls) -> "NavAction":
        return cls(ActionKind.STOP)

    @classmethod
    def explore(cls, carrier_id: str) -> "NavAction":
        return cls(ActionKind.EXPLORE, carrier_id)

    @classmethod
    def goto(cls, object_id: str) -> "NavAction":
        return cls(ActionKind.GOTO, object_id)

    def to_record(self) -> dict:
        return {'kind': self.kind.value, 'arg': self.arg}


@dataclass(frozen=True)
class TargetVerdict:
    sim_sbert: Optional[float]
    sim_gpt: Optional[float]
    sim_rgb: Optional[float]
    accepted: bool
    object_id: Optional[str] = None

    def to_record(self) -> dict:
        def r(v):
            return None if v is None else round(v, 6)

        return {
            'object': self.object_id,
            'sim_sbert': r(self.sim_sbert),
            'sim_gpt': r(self.sim_gpt),
            'sim_rgb': r(self.sim_rgb),
            'accepted': self.accepted,
        }


@dataclass(frozen=True, eq=False)
class NavCommand:
    text: Optional[str] = None
    image: Optional[Swatch] = field(default=None, repr=False)
    label_hint: Optional[str] = None
    resolved_target_id: Optional[str] = None
    target_room_id: Optional[str] = None
    query_text: Optional[str] = None
    query_vector: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if not self.text and self.image is None:
            raise ValueError("명령에 text 또는 image가 필요함")


@dataclass(frozen=True)
class ObservationEffects:
    cr_observed: FrozenSet[str] = frozenset()
    ct_new: Tuple[CandidateInfo, ...] = ()
    ct_star: Tuple[CandidateInfo, ...] = ()


def depth_confidence(d_tilde: float, params: PolicyParams) -> float:
    """관측 깊이 신뢰도 (d_tilde1에서 최대 1)"""
    if not d_tilde > 0:
        raise ValueError("d_tilde > 0 이어야 함")
    if d_tilde < params.d_tilde1:
        return math.exp(params.alpha * (d_tilde - params.d_tilde1))
    return math.exp(-params.beta * (d_tilde - params.d_tilde1))


def priority_rating(c: CandidateInfo, params: PolicyParams, same_room: bool) -> float:
    omega_r = params.omega_r_same if same_room else params.omega_r_diff
    return omega_r * (params.omega1 * c.ss * depth_confidence(c.d_tilde, params)) / (1.0 + params.omega2 * c.d)


def _rank_explore(
    state: NavState,
    graph: CarrierRelationshipSceneGraph,
    command: NavCommand,
    providers: Providers,
) -> str:
    summaries = [graph.summary(cid) for cid in sorted(state.unexplored_carriers)]
    ranked = providers.ranker.rank_carriers(
        command.query_text or command.text or "", summaries, command.target_room_id
    )
    return ranked[0]


def choose_action(
    state: NavState,
    graph: CarrierRelationshipSceneGraph,
    command: NavCommand,
    providers: Providers,
    params: PolicyParams,
    mode: Mode = Mode.FULL,
    rng: Optional[np.random.Generator] = None,
) -> NavAction:
    """정책: 종료 / 최우선 후보로 이동 / 캐리어 탐색"""
    mode = Mode.parse(mode)
    if state.found == 1 or not state.unexplored_carriers:
        return NavAction.stop()

    if mode is Mode.ONLY_CARRIERS_RANDOM:
        if rng is None:
            raise ValueError("랜덤 모드에는 rng가 필요함")
        choices = sorted(state.unexplored_carriers)
        return NavAction.explore(choices[int(rng.integers(len(choices)))])

    if state.candidates and not mode.carriers_only:
        scored = [
            (-priority_rating(c, params, c.room_id == command.target_room_id), c.object_id)
            for c in state.candidates
        ]
        return NavAction.goto(min(scored)[1])

    return NavAction.explore(_rank_explore(state, graph, command, providers))


def collect_observation_effects(
    state: NavState,
    graph: CarrierRelationshipSceneGraph,
    frames: Sequence,
    command: NavCommand,
    params: PolicyParams,
    observe_radius: float,
    excluded: Optional[Set[str]] = None,
) -> ObservationEffects:
    """이동 구간 관측에서 CR_observed, CT_new, CT* 계산

    frames: pose, objects(ObservedObject, carrier_match 포함), carriers_in_view 를 가진 관측 프레임
    excluded: 판정에서 거절된 객체 id (후보로 다시 넣지 않음)
    """
    excluded = excluded or set()
    if command.query_vector is None:
        raise ValueError("command.query_vector 가 필요함")

    latest_seen: Dict[str, Tuple[int, Pose]] = {}
    for idx, frame in enumerate(frames):
        for carrier_id in frame.carriers_in_view:
            if carrier_id not in state.unexplored_carriers:
                continue
            center = graph.objects[carrier_id].centroid.xy
            if frame.pose.position.distance_to(center) <= observe_radius:
                latest_seen[carrier_id] = (idx, frame.pose)

    cr_observed = set()
    for carrier_id, (idx, _) in latest_seen.items():
        on_it = [o for o in frames[idx].objects if o.carrier_match == carrier_id]
        if not any(cosine_similarity(o.text_feature, command.query_vector) > params.sigma1 for o in on_it):
            cr_observed.add(carrier_id)

    new_by_id: Dict[str, CandidateInfo] = {}
    for frame in frames:
        for obs in frame.objects:
            if obs.carrier_match is None or obs.carrier_match not in state.unexplored_carriers:
                continue
            if obs.track_id in excluded or obs.track_id in state.unexplored_carriers:
                continue
            ss = cosine_similarity(obs.text_feature, command.query_vector)
            if ss <= params.sigma1:
                continue
            carrier = graph.objects.get(obs.carrier_match)
            new_by_id[obs.track_id] = CandidateInfo(
                object_id=obs.track_id,
                carrier_id=obs.carrier_match,
                ss=ss,
                d=frame.pose.position.distance_to(obs.centroid.xy),
                d_tilde=obs.mean_depth,
                room_id=carrier.room_id if carrier else None,
                position=obs.centroid,
            )

    ct_new = tuple(new_by_id[k] for k in sorted(new_by_id) if new_by_id[k].carrier_id not in cr_observed)
    ct_star = tuple(c for c in state.candidates if c.carrier_id is None or c.carrier_id not in cr_observed)
    return ObservationEffects(frozenset(cr_observed), ct_new, ct_star)


def apply_transition(
    state: NavState,
    action: NavAction,
    effects: ObservationEffects,
    pose: Optional[Pose] = None,
    found: Optional[int] = None,
) -> NavState:
    """Explore/Goto 후 CR, CT 갱신"""
    if action.kind is ActionKind.STOP:
        raise ValueError("Stop 행동에는 전이가 없음")

    if action.kind is ActionKind.EXPLORE:
        if action.arg not in state.unexplored_carriers:
            raise ValueError(f"미탐색 캐리어에 없는 Explore 대상: {action.arg}")
        removed = {action.arg}
        drop_id = None
    else:
        target = state.candidate(action.arg)
        if target is None:
            raise ValueError(f"후보에 없는 Goto 대상: {action.arg}")
        removed = {target.carrier_id} if target.carrier_id is not None else set()
        drop_id = target.object_id

    unexplored = state.unexplored_carriers - removed - effects.cr_observed

    merged: Dict[str, CandidateInfo] = {c.object_id: c for c in effects.ct_star}
    for c in effects.ct_new:
        merged[c.object_id] = c
    if drop_id is not None:
        merged.pop(drop_id, None)

    candidates = tuple(
        merged[k] for k in sorted(merged)
        if merged[k].carrier_id is None or merged[k].carrier_id in unexplored
    )
    return NavState(
        pose=pose if pose is not None else state.pose,
        unexplored_carriers=unexplored,
        candidates=candidates,
        found=state.found if found is None else int(found),
        step=state.step + 1,
    )


def verify_target(
    command: NavCommand,
    observed,
    providers: Providers,
    params: VerificationParams,
) -> TargetVerdict:
    """텍스트 / 이미지 비교 / RGB 히스토그램 종합 판정"""
    if command.query_vector is None:
        raise ValueError("command.query_vector 가 필요함")
    sim_sbert = cosine_similarity(command.query_vector, observed.text_feature)
    object_id = getattr(observed, 'id', None)

    if command.image is None:
        return TargetVerdict(sim_sbert, None, None, sim_sbert >= params.theta_text, object_id)

    sim_gpt = None
    if params.use_gpt:
        try:
            sim_gpt = float(np.clip(providers.vision.compare_images(command.image, observed.appearance), 0.0, 1.0))
        except ProviderError as e:
            logger.warning(f"compare_images 실패, 해당 신호 제외: {e}")
    sim_rgb = None
    if params.use_rgb:
        sim_rgb = histogram_similarity(rgb_histogram(command.image), rgb_histogram(observed.appearance))

    terms = []
    if params.use_text:
        terms.append((params.w_text, sim_sbert))
    if sim_gpt is not None:
        terms.append((params.w_gpt, sim_gpt))
    if sim_rgb is not None:
        terms.append((params.w_rgb, sim_rgb))
    total_w = sum(w for w, _ in terms)
    if total_w <= 0:
        return TargetVerdict(sim_sbert, sim_gpt, sim_rgb, False, object_id)

    combo = sum(w * v for w, v in terms) / total_w
    accepted = combo >= params.theta_combo
    if sim_gpt is not None and sim_gpt < params.gpt_veto:
        accepted = False
    return TargetVerdict(
        sim_sbert if params.use_text else None,
        sim_gpt,
        sim_rgb,
        accepted,
        object_id,
    )


def initial_state(
    pose: Pose,
    graph: CarrierRelationshipSceneGraph,
    command: NavCommand,
    params: PolicyParams,
) -> NavState:
    """S_0: CR_0 = 전체 캐리어, CT_0 = 명령이 가리키는 기록 객체"""
    unexplored = frozenset(graph.carriers)
    target_id = command.resolved_target_id
    if target_id is None or target_id not in graph.objects:
        return NavState(pose, unexplored)

    target = graph.objects[target_id]
    if target_id in graph.carriers:
        # 캐리어 자체가 목표면 후보 없이 시작
        return NavState(pose, unexplored)
    ss = cosine_similarity(command.query_vector, target.text_feature)
    ct0 = CandidateInfo(
        object_id=target_id,
        carrier_id=graph.carrier_of(target_id),
        ss=ss,
        d=pose.position.distance_to(target.centroid.xy),
        d_tilde=params.d_tilde1,
        room_id=target.room_id,
        position=target.centroid,
    )
    return NavState(pose, unexplored, (ct0,))


def make_command(
    graph: CarrierRelationshipSceneGraph,
    providers: Providers,
    text: Optional[str] = None,
    image: Optional[Swatch] = None,
    label_hint: Optional[str] = None,
) -> NavCommand:
    """명령 해석: 질의 문장, 임베딩, 그래프에서 가장 유사한 기록 객체와 그 방"""
    query_text = command_text(providers, text, image, label_hint)
    vector = embed_command(providers, query_text)
    target_id = None
    room_id = None
    if graph.objects:
        target_id = rank_by_similarity(graph.objects.values(), vector)[0][0]
        room_id = graph.room_of(target_id)
    return NavCommand(
        text=text,
        image=image,
        label_hint=label_hint,
        resolved_target_id=target_id,
        target_room_id=room_id,
        query_text=query_text,
        query_vector=vector,
    )
