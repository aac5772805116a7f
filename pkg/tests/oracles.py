"""Brute-force reference implementations used by the tests.

None of these share code with the production search: they work on raw
markings through ``ProcessNet.enabled``/``fire`` and enumerate exhaustively.
"""

import functools
import random
from collections import Counter, deque

from convmine.model import ProcessNet, Transition


def cheapest_visible_run(net: ProcessNet) -> int:
    """Fewest visible transitions on any firing sequence from initial to final marking (0-1 BFS)."""
    start, goal = net.initial_marking, net.final_marking
    best = {start: 0}
    dq = deque([(0, start)])
    while dq:
        d, m = dq.popleft()
        if d > best.get(m, float("inf")):
            continue
        if m == goal:
            return d
        for t in net.enabled(m):
            m2 = net.fire(m, t)
            d2 = d + (1 if t.visible else 0)
            if d2 < best.get(m2, float("inf")):
                best[m2] = d2
                (dq.append if t.visible else dq.appendleft)((d2, m2))
    raise ValueError("final marking unreachable")


def brute_force_cost(events, net: ProcessNet) -> int:
    """Optimal alignment cost under unit costs by iterative deepening.

    For budget b = 0, 1, ... search every move sequence (synchronous, log-only,
    model-only) whose cost stays within b. Runs of invisible moves are capped
    at the number of places: a longer run revisits a marking and can be cut
    without changing the cost.
    """
    events = tuple(events)
    n = len(events)
    cap = len(net.places)
    bound = n + cheapest_visible_run(net)

    @functools.lru_cache(maxsize=None)
    def feasible(i, marking, budget, inv_run):
        if i == n and marking == net.final_marking:
            return True
        for t in net.enabled(marking):
            m2 = net.fire(marking, t)
            if t.visible:
                if i < n and t.label == events[i] and feasible(i + 1, m2, budget, 0):
                    return True
                if budget >= 1 and feasible(i, m2, budget - 1, 0):
                    return True
            elif inv_run < cap and feasible(i, m2, budget, inv_run + 1):
                return True
        if i < n and budget >= 1 and feasible(i + 1, marking, budget - 1, 0):
            return True
        return False

    for budget in range(bound + 1):
        if feasible(0, net.initial_marking, budget, 0):
            return budget
    raise AssertionError("no alignment within the worst-case bound")


def replays(events, net: ProcessNet) -> bool:
    """Token-game replay: is ``events`` the visible projection of a complete firing sequence?"""

    def tau_closure(markings):
        seen = set(markings)
        stack = list(markings)
        while stack:
            m = stack.pop()
            for t in net.enabled(m):
                if not t.visible:
                    m2 = net.fire(m, t)
                    if m2 not in seen:
                        seen.add(m2)
                        stack.append(m2)
        return seen

    current = tau_closure({net.initial_marking})
    for e in events:
        step = set()
        for m in current:
            for t in net.enabled(m):
                if t.visible and t.label == e:
                    step.add(net.fire(m, t))
        current = tau_closure(step)
        if not current:
            return False
    return net.final_marking in current


def succession_pairs(traces) -> dict:
    """Double loop over all index pairs i < j."""
    out = {}
    for events in traces:
        for i in range(len(events)):
            for j in range(i + 1, len(events)):
                out.setdefault((events[i], events[j]), Counter())[j - i] += 1
    return out


def window_support(traces, max_len, occurrences=False) -> Counter:
    support = Counter()
    for events in traces:
        found = Counter()
        for k in range(2, max_len + 1):
            for i in range(len(events) - k + 1):
                found[tuple(events[i:i + k])] += 1
        for seq, c in found.items():
            support[seq] += c if occurrences else 1
    return support


ALPHABET = ("Q", "R", "F", "A")


def random_state_machine(rng: random.Random, max_transitions: int = 12) -> ProcessNet:
    """Random state-machine net with a guaranteed initial-to-final path.

    May contain duplicate labels, self-loops, invisible cycles and arcs out
    of the final place.
    """
    n_places = rng.randint(2, 6)
    places = tuple(f"p{i}" for i in range(n_places))
    transitions = []
    # backbone so the final place is reachable
    for i in range(n_places - 1):
        label = rng.choice(ALPHABET + (None,))
        transitions.append(Transition(f"t{len(transitions)}", label, (places[i],), (places[i + 1],)))
    target = rng.randint(n_places, max_transitions)
    while len(transitions) < target:
        label = rng.choice(ALPHABET + (None,))
        src, dst = rng.choice(places), rng.choice(places)
        transitions.append(Transition(f"t{len(transitions)}", label, (src,), (dst,)))
    return ProcessNet(places, tuple(transitions), ((places[0], 1),), ((places[-1], 1),), name="random")
