"""Memory bank construction, memorisation schedule and invocation counting.

Two architectures are modelled:

* ``STCN``: one key per frame (computed once, reused as memory key), one
  affinity per query frame shared by all objects, values encoded per object
  only for memorised frames.
* ``STM``: memory key and value come out of a per-object memory encoder and
  the affinity is rebuilt for every object.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

from memread.core import KeySet, ShapeSpec, ValueSet, concat_columns
from memread.costmodel import Ledger, similarity_flops
from memread.errors import DimensionError, EmptyMemoryError, OrderingError
from memread.readout import memory_affinity, readout_multi, readout_single
from memread.similarity import SimilarityMeasure


class Architecture(enum.Enum):
    STM = "stm"
    STCN = "stcn"


@dataclass(frozen=True)
class SchedulePolicy:
    every_nth: int = 5
    include_temporary_last: bool = False

    def __post_init__(self):
        if self.every_nth < 1:
            raise ValueError(f"every_nth must be >= 1, got {self.every_nth}")


def decide_memorize(frame_index: int, policy: SchedulePolicy) -> bool:
    """Frame 0 (the annotated frame) and every n-th frame after it are memorised."""
    if frame_index < 0:
        raise ValueError(f"frame_index must be >= 0, got {frame_index}")
    return frame_index % policy.every_nth == 0


def memory_frame_count(video_length: int, policy: SchedulePolicy) -> int:
    """Final bank size T: memorised frames among 0..L-2.

    The last frame is never memorised because nothing queries it afterwards.
    """
    if video_length < 1:
        raise ValueError(f"video_length must be >= 1, got {video_length}")
    last = video_length - 2
    if last < 0:
        return 0
    return last // policy.every_nth + 1


@dataclass
class MemoryFrame:
    frame_index: int
    key: KeySet
    values: list


@dataclass
class MemoryBank:
    """Ordered memory frames sharing one spatial grid.

    ``shape.frames_in_memory`` is ignored on construction; :attr:`shape`
    reports the current T.
    """

    base_shape: ShapeSpec
    object_count: int
    frames: list = field(default_factory=list)

    def __post_init__(self):
        if self.object_count < 1:
            raise ValueError(f"object_count must be >= 1, got {self.object_count}")

    def __len__(self):
        return len(self.frames)

    @property
    def shape(self) -> ShapeSpec:
        if not self.frames:
            raise EmptyMemoryError("memory bank is empty")
        return replace(self.base_shape, frames_in_memory=len(self.frames))

    def _check_frame(self, key: KeySet, values: Sequence[ValueSet]):
        hw = self.base_shape.query_nodes
        if key.channels != self.base_shape.key_dim or key.count != hw:
            raise DimensionError(
                f"key must be {self.base_shape.key_dim}x{hw}, got {key.channels}x{key.count}"
            )
        if len(values) != self.object_count:
            raise DimensionError(
                f"expected {self.object_count} value sets, got {len(values)}"
            )
        for idx, v in enumerate(values):
            if v.channels != self.base_shape.value_dim or v.count != hw:
                raise DimensionError(
                    f"object {idx}: value must be {self.base_shape.value_dim}x{hw}, "
                    f"got {v.channels}x{v.count}"
                )

    def append(self, frame_index: int, key, values, ledger: Optional[Ledger] = None):
        """Store a frame. The key is the one already computed for the query.

        Only storage is recorded on ``ledger``; no encoder call is counted.
        """
        key = key if isinstance(key, KeySet) else KeySet(key)
        values = [v if isinstance(v, ValueSet) else ValueSet(v) for v in values]
        if self.frames and frame_index <= self.frames[-1].frame_index:
            raise OrderingError(
                f"frame {frame_index} must come after frame {self.frames[-1].frame_index}"
            )
        if frame_index < 0:
            raise OrderingError(f"frame index must be >= 0, got {frame_index}")
        self._check_frame(key, values)
        self.frames.append(MemoryFrame(frame_index, key, values))
        if ledger is not None:
            ledger.record_key_bytes(key.matrix.nbytes)
        return self

    def matrices(self, temporary=None):
        """Concatenate memory keys and per-object values in frame order.

        ``temporary`` is an optional ``(key, values)`` pair appended last.
        """
        frames = [(f.key, f.values) for f in self.frames]
        if temporary is not None:
            key, values = temporary
            key = key if isinstance(key, KeySet) else KeySet(key)
            values = [v if isinstance(v, ValueSet) else ValueSet(v) for v in values]
            self._check_frame(key, values)
            frames.append((key, values))
        if not frames:
            raise EmptyMemoryError("memory bank is empty and no temporary frame given")
        km = concat_columns(k for k, _ in frames)
        vms = [
            concat_columns(vals[obj] for _, vals in frames)
            for obj in range(self.object_count)
        ]
        return km, vms


@dataclass(frozen=True)
class CostReport:
    architecture: Architecture
    video_length: int
    object_count: int
    memory_frames: int
    key_encoder_calls: int
    value_encoder_calls: int
    affinity_computations: int

    def as_row(self) -> dict:
        return {
            "architecture": self.architecture.value,
            "frames": self.video_length,
            "objects": self.object_count,
            "memory_frames": self.memory_frames,
            "key_encoder_calls": self.key_encoder_calls,
            "value_encoder_calls": self.value_encoder_calls,
            "affinity_computations": self.affinity_computations,
        }


def simulate_costs(
    video_length: int,
    object_count: int,
    policy: SchedulePolicy = SchedulePolicy(),
    architecture: Architecture = Architecture.STCN,
) -> CostReport:
    """Count encoder invocations and affinity builds for a whole video.

    Frame 0 is annotated, frames 1..L-1 are queries. For STM the
    ``value_encoder_calls`` field counts memory-encoder runs and
    ``key_encoder_calls`` counts query-encoder runs.
    """
    if video_length < 1 or object_count < 1:
        raise ValueError("video_length and object_count must be >= 1")
    queries = video_length - 1
    t = memory_frame_count(video_length, policy)
    temporary = queries if policy.include_temporary_last else 0
    value_calls = object_count * (t + temporary)
    if architecture is Architecture.STCN:
        key_calls = video_length
        affinities = queries
    else:
        key_calls = queries
        affinities = object_count * queries
    return CostReport(
        architecture=architecture,
        video_length=video_length,
        object_count=object_count,
        memory_frames=t,
        key_encoder_calls=key_calls,
        value_encoder_calls=value_calls,
        affinity_computations=affinities,
    )


ValueEncoder = Callable[[int], Sequence[ValueSet]]


def propagate(
    keys: Sequence[KeySet],
    encode_values: ValueEncoder,
    object_count: int,
    policy: SchedulePolicy = SchedulePolicy(),
    architecture: Architecture = Architecture.STCN,
    measure: SimilarityMeasure = SimilarityMeasure.L2_DECOMPOSED,
    topk: Optional[int] = 20,
    ledger: Optional[Ledger] = None,
    on_affinity: Optional[Callable] = None,
):
    """Run memory reads over a key sequence frame by frame.

    ``keys[f]`` is frame f's key (C^k x HW). ``encode_values(f)`` stands in
    for the value (or memory) encoder and must return ``object_count`` value
    sets; each call is counted per object. ``on_affinity(f, bank, w)`` is
    invoked for every affinity built, after it is used.

    Returns the per-query readouts, ``outputs[f - 1][obj]``.
    """
    if ledger is None:
        ledger = Ledger()
    video_length = len(keys)
    if video_length < 1:
        raise ValueError("need at least one frame")
    first = keys[0]
    hw = first.count

    def encode(f):
        values = list(encode_values(f))
        if len(values) != object_count:
            raise DimensionError(
                f"value encoder returned {len(values)} objects, expected {object_count}"
            )
        ledger.record_value_encoder(object_count)
        return values

    if architecture is Architecture.STCN:
        ledger.record_key_encoder()

    outputs = []
    last_memorisable = video_length - 2
    if last_memorisable >= 0:
        values0 = encode(0)
        dim = values0[0].channels
        bank = MemoryBank(ShapeSpec(first.channels, dim, 1, 1, hw), object_count)
        bank.append(0, first, values0, ledger)

    for f in range(1, video_length):
        kq = keys[f]
        ledger.record_key_encoder()
        temporary = (keys[f - 1], encode(f - 1)) if policy.include_temporary_last else None
        km, vms = bank.matrices(temporary)
        flops = similarity_flops(
            measure,
            km.channels,
            ShapeSpec(km.channels, 1, km.count // hw, 1, hw),
        )
        if architecture is Architecture.STCN:
            w = memory_affinity(km, kq, measure, topk=topk)
            ledger.record_similarity_flops(flops)
            outputs.append(readout_multi(vms, w, ledger))
            if on_affinity is not None:
                on_affinity(f, bank, w)
        else:
            per_object = []
            for vm in vms:
                w = memory_affinity(km, kq, measure, topk=topk)
                ledger.record_similarity_flops(flops)
                per_object.append(readout_single(vm, w, ledger))
                if on_affinity is not None:
                    on_affinity(f, bank, w)
            outputs.append(per_object)
        if f <= last_memorisable and decide_memorize(f, policy):
            bank.append(f, kq, encode(f), ledger)
    return outputs
