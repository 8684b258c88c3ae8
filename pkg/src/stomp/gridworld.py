"""Episodic gridworld environments with exact tabular dynamics.

A layout is a rectangular grid of cells. Some cells are walls, one cell is a
terminal goal, and a set of cells is a penalty region. The four actions (up,
down, left, right) move the agent one cell in the attempted direction unless
the move is blocked by a wall or the grid edge, in which case the agent stays
in place. Under transition noise the attempted direction is the chosen one
with probability `p_intended` and each of the other three directions with
probability `p_other`.

Rewards depend only on the cell a transition ends in: +1 for the goal (which
ends the episode), -1 for a penalty cell (including staying in one via a
blocked move), 0 otherwise.

Non-terminal states are indexed 0..d-1 in row-major order over non-wall,
non-goal cells; this fixed bijection is also the one-hot feature encoding.
The terminal state is the sentinel ``TERMINAL`` (= -1) and its feature vector
is all zeros.
"""

from __future__ import annotations

import numpy as np

# Action indices, frozen. Deltas are (row, col).
UP, DOWN, LEFT, RIGHT = 0, 1, 2, 3
ACTIONS = (UP, DOWN, LEFT, RIGHT)
ACTION_NAMES = ("up", "down", "left", "right")
_DELTAS = ((-1, 0), (1, 0), (0, -1), (0, 1))

#: Sentinel state index for the absorbing terminal state.
TERMINAL = -1


class LayoutError(Exception):
    """A layout failed construction-time verification."""


class GridLayout:
    """Immutable gridworld specification plus derived tabular dynamics.

    Construction precomputes the state indexing and the exact transition
    table; instances are safe to share across concurrent runs.
    """

    def __init__(self, name, height, width, walls, hallways, start, goal,
                 penalty, p_intended, gamma):
        self.name = name
        self.height = int(height)
        self.width = int(width)
        self.walls = frozenset(walls)
        self.hallways = tuple(hallways)
        self.start = tuple(start)
        self.goal = tuple(goal)
        self.penalty = frozenset(penalty)
        self.p_intended = float(p_intended)
        self.p_other = (1.0 - self.p_intended) / 3.0
        self.gamma = float(gamma)
        self._validate()
        self._build_index()
        self._build_transitions()

    # -- construction -------------------------------------------------------

    def _validate(self):
        if not (0.0 <= self.gamma < 1.0):
            raise LayoutError(f"gamma must be in [0,1), got {self.gamma}")
        if abs(self.p_intended + 3.0 * self.p_other - 1.0) > 1e-12:
            raise LayoutError("transition noise does not sum to 1")
        for cell in (self.start, self.goal, *self.hallways):
            if cell in self.walls or not self._in_bounds(cell):
                raise LayoutError(f"cell {cell} must be open and in bounds")
        if self.goal in self.penalty:
            raise LayoutError("goal must not lie in the penalty region")
        if self.start == self.goal:
            raise LayoutError("start must differ from goal")

    def _in_bounds(self, cell):
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width

    def _build_index(self):
        cells = []
        for r in range(self.height):
            for c in range(self.width):
                if (r, c) not in self.walls and (r, c) != self.goal:
                    cells.append((r, c))
        self.cells = tuple(cells)
        self.n_states = len(cells)
        self._index = {cell: i for i, cell in enumerate(cells)}
        self.start_index = self._index[self.start]
        self.hallway_indices = tuple(self._index[h] for h in self.hallways)
        self.penalty_indices = frozenset(
            self._index[c] for c in self.penalty if c in self._index)

    def _move(self, cell, direction):
        """Destination cell when attempting `direction` (walls block)."""
        r, c = cell
        dr, dc = _DELTAS[direction]
        dest = (r + dr, c + dc)
        if not self._in_bounds(dest) or dest in self.walls:
            return cell
        return dest

    def _build_transitions(self):
        """Exact per-(s, a) outcome lists, merged by destination.

        Arrays are padded to four outcomes: ``t_next`` holds state indices
        (TERMINAL for the goal), ``t_prob``/``t_rew`` the matching
        probability and reward, ``t_n`` the outcome count, and ``t_cum`` the
        cumulative probabilities used for sampling.
        """
        d = self.n_states
        self.t_next = np.full((d, 4, 4), TERMINAL, dtype=np.int64)
        self.t_prob = np.zeros((d, 4, 4))
        self.t_rew = np.zeros((d, 4, 4))
        self.t_n = np.zeros((d, 4), dtype=np.int64)
        for s, cell in enumerate(self.cells):
            for a in ACTIONS:
                merged = {}
                for direction in ACTIONS:
                    p = self.p_intended if direction == a else self.p_other
                    if p == 0.0:
                        continue
                    dest = self._move(cell, direction)
                    merged[dest] = merged.get(dest, 0.0) + p
                for k, (dest, p) in enumerate(sorted(merged.items())):
                    if dest == self.goal:
                        nxt, rew = TERMINAL, 1.0
                    else:
                        nxt = self._index[dest]
                        rew = -1.0 if dest in self.penalty else 0.0
                    self.t_next[s, a, k] = nxt
                    self.t_prob[s, a, k] = p
                    self.t_rew[s, a, k] = rew
                self.t_n[s, a] = len(merged)
        self.t_cum = np.cumsum(self.t_prob, axis=2)

    # -- queries -------------------------------------------------------------

    def index_of(self, cell):
        """State index of a non-terminal cell."""
        return self._index[tuple(cell)]

    def has_state(self, cell):
        """Whether a cell is a non-terminal state."""
        return tuple(cell) in self._index

    def cell_of(self, s):
        return self.cells[s]

    def is_penalty_state(self, s):
        return s in self.penalty_indices

    def env_probs(self):
        """(P, R, R_exp): P[s, a, s'] over non-terminal s' (goal mass drops
        out), R[s, a, s'] the landing reward, and R_exp[s, a] the expected
        one-step reward including the +1 for entering the goal. Cached."""
        if getattr(self, "_env_probs", None) is not None:
            return self._env_probs
        d = self.n_states
        P = np.zeros((d, 4, d))
        R = np.zeros((d, 4, d))
        R_exp = np.zeros((d, 4))
        for s in range(d):
            for a in ACTIONS:
                for k in range(self.t_n[s, a]):
                    nxt = self.t_next[s, a, k]
                    p = self.t_prob[s, a, k]
                    r = self.t_rew[s, a, k]
                    R_exp[s, a] += p * r
                    if nxt != TERMINAL:
                        P[s, a, nxt] += p
                        R[s, a, nxt] = r
        self._env_probs = (P, R, R_exp)
        return self._env_probs


# -- operations ---------------------------------------------------------------


def step(layout, s, a, rng):
    """Sample one environment transition.

    Returns ``(next_state, reward, terminal)``. Stepping from the terminal
    state is a contract violation.
    """
    if s == TERMINAL:
        raise ValueError("cannot step from the terminal state")
    u = rng.random()
    k = int(np.searchsorted(layout.t_cum[s, a, :layout.t_n[s, a]], u, side="right"))
    k = min(k, layout.t_n[s, a] - 1)
    nxt = int(layout.t_next[s, a, k])
    rew = float(layout.t_rew[s, a, k])
    return nxt, rew, nxt == TERMINAL


def features(layout, s):
    """One-hot feature vector of a state; the terminal state maps to zeros."""
    x = np.zeros(layout.n_states)
    if s != TERMINAL:
        x[s] = 1.0
    return x


def state_action_features(layout, s, a):
    """One-hot over (state, action) pairs at index ``4*s + a`` (d' = 4d)."""
    if s == TERMINAL:
        raise ValueError("state-action features are undefined at the terminal state")
    x = np.zeros(4 * layout.n_states)
    x[4 * s + a] = 1.0
    return x


def transition_table(layout):
    """Exhaustive dynamics: dict ``(s, a) -> [(s', reward, probability)]``.

    ``s'`` is a state index or ``TERMINAL``.
    """
    table = {}
    for s in range(layout.n_states):
        for a in ACTIONS:
            n = layout.t_n[s, a]
            table[(s, a)] = [
                (int(layout.t_next[s, a, k]), float(layout.t_rew[s, a, k]),
                 float(layout.t_prob[s, a, k]))
                for k in range(n)
            ]
    return table


# -- text serialization --------------------------------------------------------

_CHAR_WALL, _CHAR_OPEN, _CHAR_START, _CHAR_GOAL = "#", ".", "S", "G"
_CHAR_PENALTY, _CHAR_HALLWAY = "-", "H"


def to_text(layout):
    """Render a layout in the plain-text grid format (one char per cell)."""
    rows = []
    for r in range(layout.height):
        row = []
        for c in range(layout.width):
            cell = (r, c)
            if cell in layout.walls:
                ch = _CHAR_WALL
            elif cell == layout.start:
                ch = _CHAR_START
            elif cell == layout.goal:
                ch = _CHAR_GOAL
            elif cell in layout.penalty:
                ch = _CHAR_PENALTY
            elif cell in layout.hallways:
                ch = _CHAR_HALLWAY
            else:
                ch = _CHAR_OPEN
            row.append(ch)
        rows.append("".join(row))
    return "\n".join(rows) + "\n"


def from_text(text, p_intended, gamma, name="custom"):
    """Parse the plain-text grid format back into a layout.

    Hallways are labeled H1..Hn in row-major order.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    height, width = len(lines), len(lines[0])
    walls, penalty, hallways = set(), set(), []
    start = goal = None
    for r, line in enumerate(lines):
        if len(line) != width:
            raise LayoutError("ragged rows in layout text")
        for c, ch in enumerate(line):
            cell = (r, c)
            if ch == _CHAR_WALL:
                walls.add(cell)
            elif ch == _CHAR_START:
                start = cell
            elif ch == _CHAR_GOAL:
                goal = cell
            elif ch == _CHAR_PENALTY:
                penalty.add(cell)
            elif ch == _CHAR_HALLWAY:
                hallways.append(cell)
            elif ch != _CHAR_OPEN:
                raise LayoutError(f"unknown layout char {ch!r}")
    if start is None or goal is None:
        raise LayoutError("layout text must contain exactly one S and one G")
    return GridLayout(name, height, width, walls, hallways, start, goal,
                      penalty, p_intended, gamma)


# -- builders -------------------------------------------------------------------


def build_two_room():
    """Deterministic two-room world: 72 non-terminal cells, γ = 0.99.

    Two 6-row rooms joined by a single hallway cell; a 5x3 penalty block sits
    between the start and the hallway so the optimal route runs down and
    around it (19 steps, V*(start) = 0.99^18). Construction self-verifies
    these properties against the exact value-iteration oracle and fails
    loudly if they do not hold.
    """
    height, width = 6, 13
    wall_col = 6
    hallway = (2, wall_col)
    walls = {(r, wall_col) for r in range(height)} - {hallway}
    penalty = {(r, c) for r in range(5) for c in range(2, 5)}
    layout = GridLayout("two_room", height, width, walls, [hallway],
                        start=(2, 0), goal=(3, 12), penalty=penalty,
                        p_intended=1.0, gamma=0.99)
    _verify_two_room(layout)
    return layout


def build_four_room():
    """Stochastic four-room world (classic 11x11 topology), γ = 0.99.

    Four hallway cells labeled H1..H4 in row-major order; intended moves
    succeed with probability 2/3, each other direction 1/9. The penalty
    patch sits in the start's room between the start and its nearest
    hallway. Topology is self-verified (no pinned start value).
    """
    height = width = 11
    walls = set()
    for r in range(height):
        if r not in (2, 9):
            walls.add((r, 5))
    for c in range(5):
        if c != 1:
            walls.add((5, c))
    for c in range(6, 11):
        if c != 8:
            walls.add((6, c))
    hallways = [(2, 5), (5, 1), (6, 8), (9, 5)]  # H1..H4, row-major
    penalty = {(7, 1), (7, 2), (7, 3)}
    layout = GridLayout("four_room", height, width, walls, hallways,
                        start=(9, 2), goal=(2, 8), penalty=penalty,
                        p_intended=2.0 / 3.0, gamma=0.99)
    _verify_four_room(layout)
    return layout


def _verify_two_room(layout):
    from . import planner  # deferred: planner imports this module

    if layout.n_states != 72:
        raise LayoutError(f"two-room must have 72 non-terminal cells, got {layout.n_states}")
    v_star = planner.exact_value_iteration(layout, tol=1e-12)
    target = layout.gamma ** 18
    if abs(v_star[layout.start_index] - target) > 1e-9:
        raise LayoutError(
            f"two-room V*(start) = {v_star[layout.start_index]!r}, expected {target!r}")
    path = planner.greedy_state_path(layout, v_star, layout.start_index)
    if len(path) - 1 != 19:
        raise LayoutError(f"optimal path has {len(path) - 1} steps, expected 19")
    if any(s != TERMINAL and layout.is_penalty_state(s) for s in path):
        raise LayoutError("optimal path crosses the penalty region")
    if max(layout.cell_of(s)[0] for s in path if s != TERMINAL) != layout.height - 1:
        raise LayoutError("optimal path does not take the down-and-around route")


def _verify_four_room(layout):
    if len(layout.hallways) != 4:
        raise LayoutError("four-room must have exactly 4 hallways")
    if layout.n_states != 103:
        raise LayoutError(f"four-room must have 103 non-terminal cells, got {layout.n_states}")
    # Every non-terminal state must reach the goal (probability-1 termination
    # under the random policy follows from reachability plus noise).
    reachable = {layout.goal}
    frontier = [layout.goal]
    open_cells = set(layout.cells) | {layout.goal}
    while frontier:
        r, c = frontier.pop()
        for dr, dc in _DELTAS:
            nb = (r + dr, c + dc)
            if nb in open_cells and nb not in reachable:
                reachable.add(nb)
                frontier.append(nb)
    if set(layout.cells) - reachable:
        raise LayoutError("four-room has states that cannot reach the goal")


def build(name):
    """Layout factory for the names accepted in experiment configs."""
    builders = {"two_room": build_two_room, "four_room": build_four_room}
    try:
        return builders[name]()
    except KeyError:
        raise LayoutError(f"unknown environment {name!r}") from None
