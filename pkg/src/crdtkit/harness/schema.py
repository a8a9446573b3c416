"""Document shapes and operation menus shared by the fuzzer and the oracle."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Any, Callable

from ..containers import CList, CSet
from ..primitives import CCounter, CVar
from ..recipes import CRecipe, CScaleNum, Unit
from ..runtime import Runtime
from ..textlist import CText, CValueList
from ..totalorder import END, START, CTotalOrder

WORDS = (
    "flour", "sugar", "salt", "milk", "egg", "water", "yeast", "butter",
    "oat", "rye", "honey", "oil", "jam", "rice", "corn", "plum",
)


@dataclass
class Doc:
    """The mixed fuzzing document: one of every built-in plus the recipe model."""

    runtime: Runtime
    recipe: CRecipe
    counter: CCounter
    notes: CText
    tags: CValueList
    buckets: CSet


def build_doc(runtime: Runtime) -> Doc:
    recipe = runtime.register("recipe", CRecipe)
    counter = runtime.register("counter", CCounter)
    notes = runtime.register("notes", CText)
    tags = runtime.register("tags", CValueList)
    buckets = runtime.register(
        "buckets", lambda init: CSet(init, lambda ci, args: CCounter(ci))
    )
    return Doc(runtime, recipe, counter, notes, tags, buckets)


def _word(rng: random.Random) -> str:
    return WORDS[rng.randrange(len(WORDS))]


def _visible_ingredient(rng: random.Random, doc: Doc):
    count = len(doc.recipe.ingrs)
    if count == 0:
        return None
    return doc.recipe.ingredient(rng.randrange(count))


def op_title(rng: random.Random, doc: Doc) -> bool:
    doc.recipe.title.set(_word(rng))
    return True


def op_counter(rng: random.Random, doc: Doc) -> bool:
    doc.counter.add(rng.choice((-3, -1, 1, 1, 2, 5)))
    return True


def op_notes_insert(rng: random.Random, doc: Doc) -> bool:
    index = rng.randint(0, len(doc.notes))
    doc.notes.insert_text(index, _word(rng)[: rng.randint(1, 4)])
    return True


def op_notes_delete(rng: random.Random, doc: Doc) -> bool:
    size = len(doc.notes)
    if size == 0:
        return False
    index = rng.randrange(size)
    doc.notes.delete(index, min(size - index, rng.randint(1, 3)))
    return True


def op_tag_insert(rng: random.Random, doc: Doc) -> bool:
    doc.tags.insert(rng.randint(0, len(doc.tags)), [_word(rng)])
    return True


def op_tag_delete(rng: random.Random, doc: Doc) -> bool:
    if len(doc.tags) == 0:
        return False
    doc.tags.delete(rng.randrange(len(doc.tags)))
    return True


def op_bucket_add(rng: random.Random, doc: Doc) -> bool:
    doc.buckets.add()
    return True


def op_bucket_inc(rng: random.Random, doc: Doc) -> bool:
    names = sorted(doc.buckets.names())
    if not names:
        return False
    bucket = doc.buckets.by_name(names[rng.randrange(len(names))])
    bucket.add(rng.choice((1, 2, -1)))
    return True


def op_bucket_delete(rng: random.Random, doc: Doc) -> bool:
    names = sorted(doc.buckets.names())
    if not names:
        return False
    doc.buckets.delete(doc.buckets.by_name(names[rng.randrange(len(names))]))
    return True


def op_ingredient_add(rng: random.Random, doc: Doc) -> bool:
    index = rng.randint(0, len(doc.recipe.ingrs))
    ingredient = doc.recipe.add_ingredient(index)
    ingredient.text.insert_text(0, _word(rng))
    ingredient.amount.set(float(rng.randrange(1, 500)))
    return True


def op_ingredient_delete(rng: random.Random, doc: Doc) -> bool:
    if len(doc.recipe.ingrs) == 0:
        return False
    doc.recipe.ingrs.delete(rng.randrange(len(doc.recipe.ingrs)))
    return True


def op_ingredient_move(rng: random.Random, doc: Doc) -> bool:
    count = len(doc.recipe.ingrs)
    if count < 2:
        return False
    doc.recipe.ingrs.move(rng.randrange(count), rng.randint(0, count))
    return True


def op_ingredient_archive(rng: random.Random, doc: Doc) -> bool:
    if len(doc.recipe.ingrs) == 0:
        return False
    doc.recipe.ingrs.archive(rng.randrange(len(doc.recipe.ingrs)))
    return True


def op_ingredient_restore(rng: random.Random, doc: Doc) -> bool:
    hidden = list(doc.recipe.ingrs.hidden_values())
    if not hidden:
        return False
    doc.recipe.ingrs.restore(hidden[rng.randrange(len(hidden))])
    return True


def op_ingredient_text(rng: random.Random, doc: Doc) -> bool:
    ingredient = _visible_ingredient(rng, doc)
    if ingredient is None:
        return False
    text = ingredient.text
    if len(text) > 0 and rng.random() < 0.3:
        text.delete(rng.randrange(len(text)))
    else:
        text.insert_text(rng.randint(0, len(text)), _word(rng)[:2])
    return True


def op_amount_set(rng: random.Random, doc: Doc) -> bool:
    ingredient = _visible_ingredient(rng, doc)
    if ingredient is None:
        return False
    ingredient.amount.set(float(rng.randrange(1, 1000)))
    return True


def op_amount_scale(rng: random.Random, doc: Doc) -> bool:
    ingredient = _visible_ingredient(rng, doc)
    if ingredient is None:
        return False
    ingredient.amount.scale(rng.choice((0.5, 2.0, 0.25, 1.5)))
    return True


def op_units(rng: random.Random, doc: Doc) -> bool:
    ingredient = _visible_ingredient(rng, doc)
    if ingredient is None:
        return False
    ingredient.units.set(rng.choice(tuple(Unit)))
    return True


def op_scale_recipe(rng: random.Random, doc: Doc) -> bool:
    if len(doc.recipe.ingrs) == 0:
        return False
    doc.recipe.scale_recipe(rng.choice((0.5, 2.0)))
    return True


OpFn = Callable[[random.Random, Doc], bool]

OP_MENU: tuple[tuple[str, float, OpFn], ...] = (
    ("title", 4, op_title),
    ("counter", 8, op_counter),
    ("notes-insert", 10, op_notes_insert),
    ("notes-delete", 4, op_notes_delete),
    ("tag-insert", 5, op_tag_insert),
    ("tag-delete", 2, op_tag_delete),
    ("bucket-add", 2, op_bucket_add),
    ("bucket-inc", 5, op_bucket_inc),
    ("bucket-delete", 1, op_bucket_delete),
    ("ingredient-add", 5, op_ingredient_add),
    ("ingredient-delete", 2, op_ingredient_delete),
    ("ingredient-move", 4, op_ingredient_move),
    ("ingredient-archive", 2, op_ingredient_archive),
    ("ingredient-restore", 2, op_ingredient_restore),
    ("ingredient-text", 8, op_ingredient_text),
    ("amount-set", 5, op_amount_set),
    ("amount-scale", 4, op_amount_scale),
    ("units", 3, op_units),
    ("scale-recipe", 2, op_scale_recipe),
)


def apply_random_op(
    rng: random.Random,
    doc: Doc,
    weights: dict[str, float] | None = None,
    attempts: int = 10,
) -> str | None:
    """Apply one applicable random operation; returns its name or None.

    ``weights``, when given, fully replaces the default mix: ops it does not
    name are never chosen.
    """
    names = [name for name, _, _ in OP_MENU]
    menu_weights = [
        weights.get(name, 0.0) if weights is not None else weight
        for name, weight, _ in OP_MENU
    ]
    fns = {name: fn for name, _, fn in OP_MENU}
    for _ in range(attempts):
        (name,) = rng.choices(names, weights=menu_weights)
        if fns[name](rng, doc):
            return name
    return None


# Single-component schemas used by the brute-force confluence oracle.


def _order_op(rng: random.Random, order: CTotalOrder) -> bool:
    refs = [START] + order.tree.traversal() + [END]
    index = rng.randrange(len(refs) - 1)
    order.create_position(refs[index], refs[index + 1])
    return True


def _clist_op(rng: random.Random, lst: CList) -> bool:
    kind = rng.randrange(7)
    visible = len(lst)
    if kind == 0 or visible == 0 and kind in (1, 2, 3, 5):
        lst.insert(rng.randint(0, visible))
        return True
    if kind == 1:
        lst.delete(rng.randrange(visible))
        return True
    if kind == 2:
        lst.move(rng.randrange(visible), rng.randint(0, visible))
        return True
    if kind == 3:
        lst.archive(rng.randrange(visible))
        return True
    if kind == 4:
        hidden = list(lst.hidden_values())
        if not hidden:
            return False
        lst.restore(hidden[rng.randrange(len(hidden))])
        return True
    if kind == 5:
        lst.get(rng.randrange(visible)).set(_word(rng))
        return True
    everything = list(lst.values()) + list(lst.hidden_values())
    if not everything:
        return False
    everything[rng.randrange(len(everything))].set(_word(rng))
    return True


def _cset_op(rng: random.Random, cset: CSet) -> bool:
    kind = rng.randrange(3)
    names = sorted(cset.names())
    if kind == 0 or not names:
        cset.add()
        return True
    member = cset.by_name(names[rng.randrange(len(names))])
    if kind == 1:
        cset.delete(member)
    else:
        member.add(1)
    return True


def _scalenum_op(rng: random.Random, num: CScaleNum) -> bool:
    if rng.random() < 0.5:
        num.set(float(rng.randrange(1, 100)))
    else:
        num.scale(rng.choice((0.5, 2.0, 0.25)))
    return True


def _text_op(rng: random.Random, text: CText) -> bool:
    if len(text) > 0 and rng.random() < 0.4:
        text.delete(rng.randrange(len(text)))
    else:
        text.insert_text(rng.randint(0, len(text)), _word(rng)[: rng.randint(1, 3)])
    return True


def _valuelist_op(rng: random.Random, lst: CValueList) -> bool:
    if len(lst) > 0 and rng.random() < 0.4:
        lst.delete(rng.randrange(len(lst)))
    else:
        lst.insert(rng.randint(0, len(lst)), [rng.randrange(100)])
    return True


COMPONENT_SCHEMAS: dict[str, tuple[Callable[[Runtime], Any], Callable[[random.Random, Any], bool]]] = {
    "cvar": (
        lambda rt: rt.register("x", lambda i: CVar(i, initial="")),
        lambda rng, var: (var.set(_word(rng)), True)[1],
    ),
    "ccounter": (
        lambda rt: rt.register("x", CCounter),
        lambda rng, counter: (counter.add(rng.choice((-2, -1, 1, 3))), True)[1],
    ),
    "ctotalorder": (lambda rt: rt.register("x", CTotalOrder), _order_op),
    "ctext": (lambda rt: rt.register("x", CText), _text_op),
    "cvaluelist": (lambda rt: rt.register("x", CValueList), _valuelist_op),
    "cset": (
        lambda rt: rt.register("x", lambda i: CSet(i, lambda ci, args: CCounter(ci))),
        _cset_op,
    ),
    "clist": (
        lambda rt: rt.register(
            "x", lambda i: CList(i, lambda ci, args: CVar(ci, initial=""))
        ),
        _clist_op,
    ),
    "cscalenum": (
        lambda rt: rt.register("x", lambda i: CScaleNum(i, initial=100.0)),
        _scalenum_op,
    ),
}
