"""Named two-replica scenarios with exact expected outcomes.

Each scenario runs a fixed concurrent schedule on two recipe replicas and
asserts the intended semantics: scaling beats a concurrent amount set
multiplicatively, moves and edits both survive, deletes win over concurrent
edits, archives lose to them, and restores bring entries back.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from ..recipes import CRecipe
from ..runtime import Runtime


@dataclass
class ScenarioResult:
    name: str
    passed: bool
    lines: list[str] = field(default_factory=list)


class _Pair:
    """Two connected replicas with manual synchronization."""

    def __init__(self) -> None:
        self.a = Runtime("alice")
        self.b = Runtime("bob")
        self.recipe_a: CRecipe = self.a.register("recipe", CRecipe)
        self.recipe_b: CRecipe = self.b.register("recipe", CRecipe)
        self._out_a: list = []
        self._out_b: list = []
        self.a.on_send.append(self._out_a.append)
        self.b.on_send.append(self._out_b.append)

    def sync(self) -> None:
        while self._out_a or self._out_b:
            batch = list(self._out_a)
            self._out_a.clear()
            for env in batch:
                self.b.receive(env.encode())
            batch = list(self._out_b)
            self._out_b.clear()
            for env in batch:
                self.a.receive(env.encode())

    def states(self) -> tuple[list[str], list[str]]:
        texts_a = [i.text.as_string() for i in self.recipe_a.ingredients()]
        texts_b = [i.text.as_string() for i in self.recipe_b.ingredients()]
        return texts_a, texts_b

    def converged(self) -> bool:
        return self.a.digest() == self.b.digest()


def scenario_scale_anomaly() -> ScenarioResult:
    """Amount set to 90 concurrently with halving the recipe ends at 45."""
    pair = _Pair()
    milk = pair.recipe_a.add_ingredient(0)
    milk.text.insert_text(0, "Milk")
    milk.amount.set(100.0)
    pair.sync()
    lines = [f"before: milk amount = {milk.amount.value():g} on both replicas"]
    pair.recipe_a.ingredient(0).amount.set(90.0)
    lines.append("alice sets milk to 90 (offline)")
    pair.recipe_b.scale_recipe(0.5)
    lines.append("bob halves the recipe (offline)")
    pair.sync()
    amount_a = pair.recipe_a.ingredient(0).amount.value()
    amount_b = pair.recipe_b.ingredient(0).amount.value()
    lines.append(f"after sync: milk = {amount_a:g} at alice, {amount_b:g} at bob")
    passed = amount_a == 45.0 == amount_b and pair.converged()
    return ScenarioResult("scale-anomaly", passed, lines)


def scenario_move_vs_edit() -> ScenarioResult:
    """A move and a concurrent typo fix both survive."""
    pair = _Pair()
    first = pair.recipe_a.add_ingredient(0)
    first.text.insert_text(0, "Bredd")
    pair.recipe_a.add_ingredient(1).text.insert_text(0, "Milk")
    pair.recipe_a.add_ingredient(2).text.insert_text(0, "Sugar")
    pair.sync()
    lines = [f"before: {pair.states()[0]}"]
    pair.recipe_a.ingrs.move(0, 3)
    lines.append("alice moves 'Bredd' to the end (offline)")
    text = pair.recipe_b.ingredient(0).text
    text.delete(3)
    text.insert_text(3, "a")
    lines.append("bob fixes the typo 'Bredd' -> 'Bread' (offline)")
    pair.sync()
    state_a, state_b = pair.states()
    lines.append(f"after sync: alice={state_a} bob={state_b}")
    expected = ["Milk", "Sugar", "Bread"]
    passed = state_a == expected == state_b and pair.converged()
    return ScenarioResult("move-vs-edit", passed, lines)


def scenario_delete_wins() -> ScenarioResult:
    """A delete removes the entry even against a concurrent edit."""
    pair = _Pair()
    egg = pair.recipe_a.add_ingredient(0)
    egg.text.insert_text(0, "Egg")
    pair.sync()
    lines = [f"before: {pair.states()[0]}"]
    pair.recipe_a.ingrs.delete(0)
    lines.append("alice deletes 'Egg' (offline)")
    pair.recipe_b.ingredient(0).text.insert_text(3, "s")
    lines.append("bob edits 'Egg' -> 'Eggs' (offline)")
    pair.sync()
    state_a, state_b = pair.states()
    lines.append(f"after sync: alice={state_a} bob={state_b}")
    passed = state_a == [] == state_b and pair.converged()
    return ScenarioResult("delete-wins", passed, lines)


def scenario_update_wins() -> ScenarioResult:
    """An archive is canceled by a concurrent edit; the entry stays, edited."""
    pair = _Pair()
    egg = pair.recipe_a.add_ingredient(0)
    egg.text.insert_text(0, "Egg")
    pair.sync()
    lines = [f"before: {pair.states()[0]}"]
    pair.recipe_a.ingrs.archive(0)
    lines.append("alice archives 'Egg' (offline)")
    pair.recipe_b.ingredient(0).text.insert_text(3, "s")
    lines.append("bob edits 'Egg' -> 'Eggs' (offline)")
    pair.sync()
    state_a, state_b = pair.states()
    lines.append(f"after sync: alice={state_a} bob={state_b}")
    passed = state_a == ["Eggs"] == state_b and pair.converged()
    return ScenarioResult("update-wins", passed, lines)


def scenario_archive_restore() -> ScenarioResult:
    """Archive hides an entry everywhere; a later restore brings it back."""
    pair = _Pair()
    egg = pair.recipe_a.add_ingredient(0)
    egg.text.insert_text(0, "Egg")
    pair.sync()
    lines = [f"before: {pair.states()[0]}"]
    pair.recipe_a.ingrs.archive(0)
    pair.sync()
    hidden = pair.states()
    lines.append(f"after archive: alice={hidden[0]} bob={hidden[1]}")
    hidden_ok = hidden == ([], [])
    pair.recipe_a.ingrs.restore(egg)
    pair.sync()
    state_a, state_b = pair.states()
    lines.append(f"after restore: alice={state_a} bob={state_b}")
    passed = hidden_ok and state_a == ["Egg"] == state_b and pair.converged()
    return ScenarioResult("archive-restore", passed, lines)


SCENARIOS: dict[str, Callable[[], ScenarioResult]] = {
    "scale-anomaly": scenario_scale_anomaly,
    "move-vs-edit": scenario_move_vs_edit,
    "delete-wins": scenario_delete_wins,
    "update-wins": scenario_update_wins,
    "archive-restore": scenario_archive_restore,
}


def run_scenario(name: str) -> ScenarioResult:
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    return SCENARIOS[name]()
