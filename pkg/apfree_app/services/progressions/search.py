"""
Largest restricted-AP-free subsets of F_p^n for small p^n.

The forbidden progressions form a 3-uniform hypergraph; free sets are its
independent sets. Sets are Python int bitmasks over vertices in search order.
"""
import logging
from dataclasses import dataclass

import numpy as np

from apfree_app.services.algebra.fields import difference_vectors, digits_table, encode_digits
from apfree_app.utils.constants import AP_DIFFERENCES, EXTREMAL_EXHAUSTIVE_MAX_POINTS
from apfree_app.utils.errors import PreconditionError
from apfree_app.utils.validators import validate_dimension, validate_prime

logger = logging.getLogger(__name__)


def forbidden_triples(p, n, differences=AP_DIFFERENCES):
    """Distinct point triples {x, x+a, x+2a} with a != 0, as sorted index tuples."""
    digits = digits_table(p, n)
    triples = set()
    for a in difference_vectors(n, differences)[1:]:
        second = encode_digits(digits + a, p)
        third = encode_digits(digits + 2 * a, p)
        for x, y, z in zip(range(p ** n), second.tolist(), third.tolist()):
            triples.add(tuple(sorted((x, y, z))))
    return sorted(triples)


@dataclass
class ExtremalResult:
    p: int
    n: int
    mode: str
    size: int
    members: tuple
    optimal: bool
    nodes: int
    greedy_size: int = 0

    def to_dict(self):
        return dict(self.__dict__, members=list(self.members))


@dataclass
class _SearchState:
    pairs: list
    suffix: list
    budget: int = None
    nodes: int = 0
    best_size: int = 0
    best_mask: int = 0
    exhausted: bool = False
    use_bound: bool = True


def _popcount(mask):
    return bin(mask).count('1')


def _include(state, position, chosen, blocked):
    for u, w in state.pairs[position]:
        if chosen >> u & 1:
            blocked |= 1 << w
        elif chosen >> w & 1:
            blocked |= 1 << u
    return chosen | (1 << position), blocked


def _dfs(state, position, chosen, blocked, size):
    state.nodes += 1
    if state.budget is not None and state.nodes > state.budget:
        state.exhausted = True
        return
    if size > state.best_size:
        state.best_size, state.best_mask = size, chosen
    total = len(state.pairs)
    if position == total:
        return
    if state.use_bound and size + _popcount(state.suffix[position] & ~blocked) <= state.best_size:
        return
    if not blocked >> position & 1:
        new_chosen, new_blocked = _include(state, position, chosen, blocked)
        _dfs(state, position + 1, new_chosen, new_blocked, size + 1)
        if state.exhausted:
            return
    _dfs(state, position + 1, chosen, blocked, size)


def extremal_search(p, n, mode='bb', budget=None, differences=AP_DIFFERENCES):
    """
    Maximum free subset of F_p^n.

    'exhaustive' visits every free set (p^n <= 25). 'bb' orders vertices by
    degree, seeds the bound with a greedy set and prunes when the chosen size
    plus the unblocked remainder cannot beat the incumbent; when the node
    budget runs out the incumbent is returned with optimal=False.
    """
    validate_prime(p)
    validate_dimension(n, minimum=1)
    if mode not in ('exhaustive', 'bb'):
        raise PreconditionError(f"unknown search mode: {mode}")
    size = p ** n
    if mode == 'exhaustive' and size > EXTREMAL_EXHAUSTIVE_MAX_POINTS:
        raise PreconditionError(f"exhaustive mode needs p^n <= {EXTREMAL_EXHAUSTIVE_MAX_POINTS}, got {size}")

    triples = forbidden_triples(p, n, differences)
    degree = np.zeros(size, dtype=np.int64)
    for triple in triples:
        degree[list(triple)] += 1
    if mode == 'bb':
        order = sorted(range(size), key=lambda v: (-degree[v], v))
    else:
        order = list(range(size))
    position = {v: k for k, v in enumerate(order)}

    pairs = [[] for _ in range(size)]
    for triple in triples:
        ranked = [position[v] for v in triple]
        for k in range(3):
            others = ranked[:k] + ranked[k + 1:]
            pairs[ranked[k]].append((others[0], others[1]))
    suffix = [0] * (size + 1)
    for k in range(size - 1, -1, -1):
        suffix[k] = suffix[k + 1] | (1 << k)

    state = _SearchState(pairs=pairs, suffix=suffix, budget=budget, use_bound=(mode == 'bb'))
    greedy_size = 0
    if mode == 'bb':
        chosen = blocked = 0
        for k in range(size):
            if not blocked >> k & 1:
                chosen, blocked = _include(state, k, chosen, blocked)
                greedy_size += 1
        state.best_size, state.best_mask = greedy_size, chosen

    _dfs(state, 0, 0, 0, 0)
    members = tuple(sorted(order[k] for k in range(size) if state.best_mask >> k & 1))
    logger.info(f"Extremal search p={p} n={n} mode={mode}: size {state.best_size} after {state.nodes} nodes")
    return ExtremalResult(
        p=p,
        n=n,
        mode=mode,
        size=state.best_size,
        members=members,
        optimal=not state.exhausted,
        nodes=state.nodes,
        greedy_size=greedy_size,
    )
