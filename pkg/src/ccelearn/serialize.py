"""Versioned JSON persistence for game trees and solver checkpoints.

Documents are validated against the schema files shipped with the package;
loading a document with an unexpected ``version`` fails with
:class:`SchemaError` rather than guessing.
"""

from __future__ import annotations

import json
from importlib import resources

import jsonschema
import numpy as np

from .efg import CHANCE, TERMINAL, GameTree, TreeBuilder, TreeError

GAME_SCHEMA_VERSION = 1
CHECKPOINT_SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """Document does not match the expected schema or version."""


def _schema(name: str) -> dict:
    with resources.files("ccelearn.schemas").joinpath(name).open("r") as fh:
        return json.load(fh)


def tree_to_jsonable(tree: GameTree) -> dict:
    nodes = []
    for h in range(tree.num_nodes):
        pl = int(tree.node_player[h])
        nodes.append(
            {
                "id": h,
                "parent": None if tree.node_parent[h] < 0 else int(tree.node_parent[h]),
                "action": tree.node_action[h],
                "player": pl,
                "infoset": None if tree.node_infoset[h] < 0 else int(tree.node_infoset[h]),
                "actions": list(tree.node_actions[h]) if tree.node_actions[h] is not None else None,
                "chance_probs": list(tree.node_chance_probs[h]) if pl == CHANCE else None,
                "payoffs": list(tree.node_payoffs[h]) if pl == TERMINAL else None,
            }
        )
    infosets = [
        {"id": i.id, "player": i.player, "key": i.key, "nodes": list(i.nodes)}
        for i in tree.infosets
    ]
    return {
        "schema": "ccelearn-game",
        "version": GAME_SCHEMA_VERSION,
        "players": tree.num_players,
        "nodes": nodes,
        "infosets": infosets,
    }


def tree_from_jsonable(doc: dict) -> GameTree:
    try:
        jsonschema.validate(doc, _schema("game.schema.json"))
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"not a valid game document: {exc.message}") from None
    if doc["version"] != GAME_SCHEMA_VERSION:
        raise SchemaError(f"unsupported game schema version {doc['version']}")
    nodes = sorted(doc["nodes"], key=lambda n: n["id"])
    if [n["id"] for n in nodes] != list(range(len(nodes))):
        raise SchemaError("node ids must be dense and start at 0")
    infoset_key = {}
    for ifs in doc["infosets"]:
        for h in ifs["nodes"]:
            infoset_key[h] = ifs["key"]
    b = TreeBuilder(doc["players"])
    for n in nodes:
        parent = n["parent"]
        prob = None
        if parent is not None:
            par = nodes[parent]
            if par["id"] >= n["id"]:
                raise SchemaError("parents must precede children")
            if par["player"] == CHANCE:
                try:
                    prob = par["chance_probs"][par["actions"].index(n["action"])]
                except (ValueError, IndexError, TypeError):
                    raise SchemaError(f"missing chance probability for node {n['id']}") from None
        pl = n["player"]
        try:
            if pl == TERMINAL:
                b.add_terminal(parent, n["action"], payoffs=n["payoffs"], prob=prob)
            elif pl == CHANCE:
                b.add_chance(parent, n["action"], prob=prob)
            else:
                b.add_decision(
                    parent,
                    n["action"],
                    player=pl,
                    infoset_key=infoset_key.get(n["id"], f"node{n['id']}"),
                    actions=n["actions"],
                    prob=prob,
                )
        except (TreeError, TypeError) as exc:
            raise SchemaError(f"bad node {n['id']}: {exc}") from None
    return b.finalize()


def save_game(tree: GameTree, path) -> None:
    with open(path, "w") as fh:
        json.dump(tree_to_jsonable(tree), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_game(path) -> GameTree:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not JSON: {exc}") from None
    return tree_from_jsonable(doc)


def structurally_equal(a: GameTree, b: GameTree) -> bool:
    """Exact structural identity: nodes, actions, probabilities, payoffs, infosets."""
    if a.num_players != b.num_players or a.num_nodes != b.num_nodes:
        return False
    if not (
        np.array_equal(a.node_player, b.node_player)
        and np.array_equal(a.node_parent, b.node_parent)
        and np.array_equal(a.node_infoset, b.node_infoset)
    ):
        return False
    if a.node_action != b.node_action or a.node_actions != b.node_actions:
        return False
    if a.node_chance_probs != b.node_chance_probs or a.node_payoffs != b.node_payoffs:
        return False
    return [(i.player, i.key, i.nodes) for i in a.infosets] == [
        (i.player, i.key, i.nodes) for i in b.infosets
    ]


def save_checkpoint(doc: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_checkpoint(path) -> dict:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not JSON: {exc}") from None
    try:
        jsonschema.validate(doc, _schema("checkpoint.schema.json"))
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"not a valid checkpoint: {exc.message}") from None
    if doc["version"] != CHECKPOINT_SCHEMA_VERSION:
        raise SchemaError(f"unsupported checkpoint version {doc['version']}")
    return doc
