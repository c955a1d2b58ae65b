"""Game and problem-spec documents (JSON).

A game document names its sites and gives one block per player::

    {
      "sites": ["A", "B"],
      "catcher": {"resource": 1, "limits": 1, "b": 0, "d": {"A": 1, "B": 1}},
      "evaders": [
        {"id": "e1", "resource": 1, "limits": 1,
         "b": {"A": 6, "B": 4}, "d": -10}
      ],
      "annotations": {}
    }

Coefficient entries are either a scalar (broadcast over all sites) or a
per-site map covering every site.  ``a``, ``b`` and ``c`` default to zero;
``resource``, ``limits`` and ``d`` are required.  Unknown keys are
rejected.  Serialization writes every number in shortest round-trip form,
so ``parse(serialize(game))`` reproduces the game bit for bit.

Reduction inputs use the same document style with a ``"kind"``
discriminator (``security``, ``test``, ``matching``).
"""

from __future__ import annotations

import json

import numpy as np

from .core import CEGame, StrategyProfile
from .errors import GameFileError
from .reductions import (
    AttackerType,
    MatchingEdge,
    MatchingSpec,
    SecurityGameSpec,
    TakerType,
    TestGameSpec,
)

__all__ = ["parse_game", "serialize_game", "parse_spec",
           "parse_profile", "serialize_profile"]

_PLAYER_KEYS = {"id", "resource", "limits", "a", "b", "c", "d"}
_REQUIRED_PLAYER_KEYS = ("resource", "limits", "d")


def _load(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameFileError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise GameFileError("document root must be an object")
    return doc


def _check_keys(obj: dict, allowed: set, where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise GameFileError(
            f"unknown key(s) {sorted(unknown)} in {where}; "
            f"allowed: {sorted(allowed)}"
        )


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise GameFileError(f"{where} must be a number, got {value!r}")
    return float(value)


def _per_site(value, sites, where: str) -> list:
    if isinstance(value, dict):
        unknown = set(value) - set(sites)
        if unknown:
            raise GameFileError(f"{where} names unknown site(s) {sorted(unknown)}")
        missing = [s for s in sites if s not in value]
        if missing:
            raise GameFileError(f"{where} is missing site(s) {missing}")
        return [_number(value[s], f"{where}[{s!r}]") for s in sites]
    scalar = _number(value, where)
    return [scalar] * len(sites)


def _player_row(obj, sites, where: str):
    if not isinstance(obj, dict):
        raise GameFileError(f"{where} must be an object")
    _check_keys(obj, _PLAYER_KEYS, where)
    for key in _REQUIRED_PLAYER_KEYS:
        if key not in obj:
            raise GameFileError(f"{where} is missing required key {key!r}")
    resource = _number(obj["resource"], f"{where}.resource")
    rows = {}
    for key in ("limits", "a", "b", "c", "d"):
        if key in obj:
            rows[key] = _per_site(obj[key], sites, f"{where}.{key}")
        else:
            rows[key] = [0.0] * len(sites)
    return resource, rows, obj.get("id")


def parse_game(text: str) -> CEGame:
    doc = _load(text)
    _check_keys(doc, {"sites", "catcher", "evaders", "annotations"}, "document")
    for key in ("sites", "catcher", "evaders"):
        if key not in doc:
            raise GameFileError(f"document is missing required key {key!r}")
    sites = doc["sites"]
    if (not isinstance(sites, list) or not sites
            or any(not isinstance(s, str) for s in sites)):
        raise GameFileError('"sites" must be a non-empty list of names')
    if len(set(sites)) != len(sites):
        raise GameFileError("site names must be unique")
    if not isinstance(doc["evaders"], list):
        raise GameFileError('"evaders" must be a list')

    blocks = [_player_row(doc["catcher"], sites, "catcher")]
    for k, ev in enumerate(doc["evaders"]):
        blocks.append(_player_row(ev, sites, f"evaders[{k}]"))

    p = len(blocks)
    resources = np.array([b[0] for b in blocks])
    grids = {key: np.array([b[1][key] for b in blocks])
             for key in ("limits", "a", "b", "c", "d")}
    ids = [b[2] for b in blocks[1:]]
    evader_ids = None
    if any(i is not None for i in ids):
        evader_ids = tuple(i if i is not None else f"evader{k + 1}"
                           for k, i in enumerate(ids))
    annotations = doc.get("annotations") or {}
    if not isinstance(annotations, dict):
        raise GameFileError('"annotations" must be an object')
    return CEGame(sites=tuple(sites), resources=resources,
                  limits=grids["limits"], alt=grids["a"], base=grids["b"],
                  const=grids["c"], delta=grids["d"],
                  evader_ids=evader_ids, annotations=annotations)


def _row_map(game: CEGame, grid: np.ndarray, player: int) -> dict:
    return {site: float(grid[player, s]) for s, site in enumerate(game.sites)}


def _player_block(game: CEGame, player: int) -> dict:
    block = {}
    if player > 0 and game.evader_ids is not None:
        block["id"] = game.evader_ids[player - 1]
    block["resource"] = float(game.resources[player])
    block["limits"] = _row_map(game, game.limits, player)
    block["a"] = _row_map(game, game.alt, player)
    block["b"] = _row_map(game, game.base, player)
    block["c"] = _row_map(game, game.const, player)
    block["d"] = _row_map(game, game.delta, player)
    return block


def serialize_game(game: CEGame) -> str:
    doc = {
        "sites": list(game.sites),
        "catcher": _player_block(game, 0),
        "evaders": [_player_block(game, i) for i in game.evaders],
    }
    if game.annotations:
        doc["annotations"] = dict(game.annotations)
    return json.dumps(doc, indent=2)


def serialize_profile(game: CEGame, profile: StrategyProfile) -> str:
    doc = {
        "sites": list(game.sites),
        "allocation": {
            "catcher": [float(v) for v in profile.alloc[0]],
            "evaders": [[float(v) for v in profile.alloc[i]]
                        for i in game.evaders],
        },
    }
    return json.dumps(doc, indent=2)


def parse_profile(text: str, game: CEGame) -> StrategyProfile:
    """Accepts either a bare profile document or any solver output that
    carries an "allocation" object."""
    doc = _load(text)
    alloc = doc.get("allocation")
    if not isinstance(alloc, dict):
        raise GameFileError('document has no "allocation" object')
    for key in ("catcher", "evaders"):
        if key not in alloc:
            raise GameFileError(f'"allocation" is missing key {key!r}')
    rows = [alloc["catcher"], *alloc["evaders"]]
    if len(rows) != game.num_players:
        raise GameFileError(
            f"allocation has {len(rows)} players, game has {game.num_players}"
        )
    m = game.num_sites
    for k, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != m:
            raise GameFileError(f"allocation row {k} must list {m} site values")
    return StrategyProfile(np.array(rows, dtype=np.float64))


def _spec_security(doc: dict) -> SecurityGameSpec:
    _check_keys(doc, {"kind", "targets", "defender", "attackers"}, "document")
    targets = doc.get("targets")
    if not isinstance(targets, list) or not targets:
        raise GameFileError('"targets" must be a non-empty list')
    defender = doc.get("defender")
    if not isinstance(defender, dict):
        raise GameFileError('"defender" must be an object')
    _check_keys(defender, {"resources", "covered", "uncovered"}, "defender")
    attackers = []
    for k, att in enumerate(doc.get("attackers") or []):
        where = f"attackers[{k}]"
        _check_keys(att, {"probability", "resources", "covered", "uncovered"},
                    where)
        attackers.append(AttackerType(
            probability=_number(att["probability"], f"{where}.probability"),
            resources=_number(att["resources"], f"{where}.resources"),
            covered=tuple(_per_site(att["covered"], targets, f"{where}.covered")),
            uncovered=tuple(_per_site(att["uncovered"], targets,
                                      f"{where}.uncovered")),
        ))
    if not attackers:
        raise GameFileError("security spec needs at least one attacker type")
    return SecurityGameSpec(
        targets=tuple(targets),
        defender_resources=_number(defender["resources"], "defender.resources"),
        defender_covered=tuple(_per_site(defender["covered"], targets,
                                         "defender.covered")),
        defender_uncovered=tuple(_per_site(defender["uncovered"], targets,
                                           "defender.uncovered")),
        attackers=tuple(attackers),
    )


def _spec_test(doc: dict) -> TestGameSpec:
    _check_keys(doc, {"kind", "questions", "scores", "weights", "length",
                      "takers"}, "document")
    questions = doc.get("questions")
    if not isinstance(questions, list) or not questions:
        raise GameFileError('"questions" must be a non-empty list')
    takers = []
    for k, taker in enumerate(doc.get("takers") or []):
        where = f"takers[{k}]"
        _check_keys(taker, {"probability", "importance", "hard", "capacity"},
                    where)
        hard = taker.get("hard")
        if not isinstance(hard, list):
            raise GameFileError(f"{where}.hard must be a list of questions")
        unknown = set(hard) - set(questions)
        if unknown:
            raise GameFileError(f"{where}.hard names unknown question(s) "
                                f"{sorted(unknown)}")
        takers.append(TakerType(
            probability=_number(taker["probability"], f"{where}.probability"),
            importance=_number(taker["importance"], f"{where}.importance"),
            hard=frozenset(hard),
            capacity=int(_number(taker["capacity"], f"{where}.capacity")),
        ))
    if not takers:
        raise GameFileError("test spec needs at least one taker type")
    return TestGameSpec(
        questions=tuple(questions),
        scores=tuple(_per_site(doc["scores"], questions, "scores")),
        weights=tuple(_per_site(doc["weights"], questions, "weights")),
        length=int(_number(doc["length"], "length")),
        takers=tuple(takers),
    )


def _spec_matching(doc: dict) -> MatchingSpec:
    _check_keys(doc, {"kind", "left", "right", "edges"}, "document")
    left = doc.get("left")
    right = doc.get("right")
    for name, side in (("left", left), ("right", right)):
        if not isinstance(side, dict) or not side:
            raise GameFileError(f'"{name}" must be a non-empty object of '
                                "vertex capacities")
    edges = []
    for k, edge in enumerate(doc.get("edges") or []):
        where = f"edges[{k}]"
        _check_keys(edge, {"left", "right", "capacity", "cost"}, where)
        if edge.get("left") not in left or edge.get("right") not in right:
            raise GameFileError(f"{where} references unknown vertices")
        edges.append(MatchingEdge(
            left=edge["left"],
            right=edge["right"],
            capacity=_number(edge["capacity"], f"{where}.capacity"),
            cost=_number(edge.get("cost", 0.0), f"{where}.cost"),
        ))
    return MatchingSpec(
        left=tuple(left),
        right=tuple(right),
        left_capacity=tuple(_number(v, f"left[{u!r}]") for u, v in left.items()),
        right_capacity=tuple(_number(v, f"right[{u!r}]")
                             for u, v in right.items()),
        edges=tuple(edges),
    )


def parse_spec(text: str):
    """Parse a reduction input; the "kind" key picks the family."""
    doc = _load(text)
    kind = doc.get("kind")
    if kind == "security":
        return _spec_security(doc)
    if kind == "test":
        return _spec_test(doc)
    if kind == "matching":
        return _spec_matching(doc)
    raise GameFileError(
        f'"kind" must be one of security, test, matching (got {kind!r})'
    )
