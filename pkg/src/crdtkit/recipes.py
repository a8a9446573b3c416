"""Example custom CRDTs: a scalable number and a recipe data model.

CScaleNum is a register whose scale ops act multiplicatively on concurrent
set ops: setting an amount to 90 concurrently with halving yields 45 on
every replica. Each set op embeds a summary of the scale ops its sender had
seen; every scale op outside the winning set's summary still applies.
"""

from __future__ import annotations

import math
from enum import Enum
from typing import Any

from . import codec
from .collab import CObject, CPrimitive, Init
from .containers import CList
from .errors import DecodeError
from .ids import Dot
from .primitives import CVar
from .runtime import UpdateMeta
from .saves import MergeContext
from .textlist import CText

_OP_SET = 1
_OP_SCALE = 2

_NO_TAG = (0, "")


class CScaleNum(CPrimitive):
    """A number register whose scaling also scales concurrent sets."""

    def __init__(self, init: Init, initial: float = 0.0):
        super().__init__(init)
        self._initial = float(initial)
        # Winning set op: (value, (lamport, writer), scale ops it had seen).
        self._win_value = self._initial
        self._win_tag: tuple[int, str] = _NO_TAG
        self._win_observed: dict[str, int] = {}
        self._scales: dict[Dot, float] = {}
        self._scale_seen: dict[str, int] = {}

    def value(self) -> float:
        out = self._win_value
        for dot, factor in sorted(self._scales.items()):
            if dot.counter > self._win_observed.get(dot.replica, 0):
                out *= factor
        return out

    def set(self, value: float) -> None:
        value = float(value)
        if not math.isfinite(value):
            raise ValueError("value must be finite")
        w = codec.Writer()
        w.byte(_OP_SET)
        w.f64(value)
        w.uint(len(self._scale_seen))
        for replica, counter in sorted(self._scale_seen.items()):
            w.str(replica)
            w.uint(counter)
        self.send_primitive(w.getvalue())

    def scale(self, factor: float) -> None:
        factor = float(factor)
        if not math.isfinite(factor) or factor <= 0:
            raise ValueError("scale factor must be finite and positive")
        w = codec.Writer()
        w.byte(_OP_SCALE)
        w.f64(factor)
        self.send_primitive(w.getvalue())

    def receive_primitive(self, payload: bytes, meta: UpdateMeta) -> None:
        r = codec.Reader(payload)
        tag = r.byte()
        if tag == _OP_SET:
            value = r.f64()
            observed = {}
            for _ in range(r.uint()):
                replica = r.str()
                observed[replica] = r.uint()
            r.expect_done()
            self._adopt(value, (meta.lamport, meta.sender.replica), observed)
        elif tag == _OP_SCALE:
            factor = r.f64()
            r.expect_done()
            self._add_scale(meta.sender, factor)
        else:
            raise DecodeError(f"unknown scale-number op tag {tag}")

    def _adopt(self, value: float, tag: tuple[int, str], observed: dict[str, int]) -> None:
        if tag > self._win_tag:
            self._win_value = value
            self._win_tag = tag
            self._win_observed = observed

    def _add_scale(self, dot: Dot, factor: float) -> None:
        self._scales[dot] = factor
        if dot.counter > self._scale_seen.get(dot.replica, 0):
            self._scale_seen[dot.replica] = dot.counter

    def _save_own(self) -> bytes:
        w = codec.Writer()
        w.byte(1 if self._win_tag != _NO_TAG else 0)
        if self._win_tag != _NO_TAG:
            w.f64(self._win_value)
            w.uint(self._win_tag[0])
            w.str(self._win_tag[1])
            w.uint(len(self._win_observed))
            for replica, counter in sorted(self._win_observed.items()):
                w.str(replica)
                w.uint(counter)
        w.uint(len(self._scales))
        for dot, factor in sorted(self._scales.items()):
            w.str(dot.replica)
            w.uint(dot.counter)
            w.f64(factor)
        return w.getvalue()

    def _load_own(self, data: bytes, ctx: MergeContext) -> None:
        if not data:
            return
        r = codec.Reader(data)
        if r.byte():
            value = r.f64()
            tag = (r.uint(), r.str())
            observed = {}
            for _ in range(r.uint()):
                replica = r.str()
                observed[replica] = r.uint()
            self._adopt(value, tag, observed)
        for _ in range(r.uint()):
            dot = Dot(r.str(), r.uint())
            factor = r.f64()
            self._add_scale(dot, factor)
        r.expect_done()

    def _observable(self) -> float:
        return self.value()


class Unit(str, Enum):
    GRAMS = "g"
    MILLILITERS = "ml"
    CUPS = "cup"
    COUNT = "ct"


def _encode_unit(unit: Unit) -> bytes:
    return codec.encode_value(unit.value)


def _decode_unit(data: bytes) -> Unit:
    return Unit(codec.decode_value(data))


class CIngredient(CObject):
    """One recipe line: free text, a scalable amount, and a unit register."""

    def __init__(self, init: Init):
        super().__init__(init)
        self.text: CText = self.register_collab("text", CText)
        self.amount: CScaleNum = self.register_collab("amount", CScaleNum)
        self.units: CVar = self.register_collab(
            "units",
            lambda i: CVar(i, initial=Unit.GRAMS, encode=_encode_unit, decode=_decode_unit),
        )

    def set_units(self, units: Unit) -> None:
        self.units.set(units)


class CRecipe(CObject):
    """A title, a movable ingredient list, and plain-text instructions."""

    def __init__(self, init: Init):
        super().__init__(init)
        self.title: CVar = self.register_collab("title", lambda i: CVar(i, initial=""))
        self.ingrs: CList = self.register_collab(
            "ingrs", lambda i: CList(i, lambda ci, args: CIngredient(ci))
        )
        self.instrs: CText = self.register_collab("instrs", CText)

    def add_ingredient(self, index: int) -> CIngredient:
        return self.ingrs.insert(index)

    def ingredient(self, index: int) -> CIngredient:
        return self.ingrs.get(index)

    def ingredients(self) -> list[CIngredient]:
        return list(self.ingrs.values())

    def scale_recipe(self, factor: float) -> None:
        """Scale every currently visible ingredient's amount."""
        for ingredient in self.ingredients():
            ingredient.amount.scale(factor)
