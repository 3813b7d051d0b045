"""Text <-> ternary element codec.

Every character becomes a block of four trits (big-endian base 3). The
block ``0120`` (value 15) is reserved as the start/end anchor: it is
asymmetric, so it fixes both the starting element and the reading direction,
and it contains all three widths, so a decoder always sees every level.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Collection, Iterable, NamedTuple, Sequence

from .errors import (
    AmbiguousAnchor,
    EmptyMessage,
    InvalidBlock,
    MessageTooLong,
    NoAnchorFound,
    ReservedBlock,
    UnknownCharacter,
    UnmappedValue,
)

BLOCK = 4
ANCHOR = (0, 1, 2, 0)
ANCHOR_VALUE = 15
_ANCHOR_STR = "0120"

ALPHANUMERIC = (
    "0123456789"
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    "abcdefghijklmnopqrstuvwxyz"
)
# URL-friendly specials; the space takes the slot a tilde would otherwise
# hold so that plain labels such as "Red Oak" are encodable.
SPECIALS = "./:-_?#&=%+ @!$'()"


@dataclass(frozen=True)
class TritString:
    trits: tuple[int, ...]
    circular: bool = True

    def __post_init__(self):
        trits = tuple(int(t) for t in self.trits)
        if any(t not in (0, 1, 2) for t in trits):
            raise ValueError("trits must be 0, 1 or 2")
        object.__setattr__(self, "trits", trits)

    def __len__(self) -> int:
        return len(self.trits)

    def __iter__(self):
        return iter(self.trits)

    def __getitem__(self, item):
        return self.trits[item]

    def tiled(self, n: int) -> tuple[int, ...]:
        """The first ``n`` trits of this string repeated end to end."""
        if not self.trits:
            raise ValueError("cannot tile an empty trit string")
        reps = -(-n // len(self.trits))
        return (self.trits * reps)[:n]


class CharTable:
    """Bijection between characters and block values ``0..80`` minus 15."""

    def __init__(self, chars: str):
        if len(set(chars)) != len(chars):
            raise ValueError("duplicate characters in table")
        if len(chars) > 3 ** BLOCK - 1:
            raise ValueError("table holds at most 80 characters")
        self.chars = chars
        self._value = {}
        for i, c in enumerate(chars):
            self._value[c] = i if i < ANCHOR_VALUE else i + 1
        self._char = {v: c for c, v in self._value.items()}

    def __len__(self) -> int:
        return len(self.chars)

    def __contains__(self, c: str) -> bool:
        return c in self._value

    def value(self, c: str) -> int:
        try:
            return self._value[c]
        except KeyError:
            raise UnknownCharacter(f"character {c!r} is not in the table") from None

    def char(self, value: int) -> str:
        if value == ANCHOR_VALUE:
            raise ReservedBlock("block 0120 is the reserved anchor")
        try:
            return self._char[value]
        except KeyError:
            raise UnmappedValue(f"block value {value} maps to no character") from None


DEFAULT_TABLE = CharTable(ALPHANUMERIC + SPECIALS)


def char_to_trits(c: str, table: CharTable = DEFAULT_TABLE) -> tuple[int, ...]:
    v = table.value(c)
    out = []
    for _ in range(BLOCK):
        v, r = divmod(v, 3)
        out.append(r)
    return tuple(reversed(out))


def trits_to_char(block: Sequence[int], table: CharTable = DEFAULT_TABLE) -> str:
    if len(block) != BLOCK:
        raise ValueError(f"a block has exactly {BLOCK} trits, got {len(block)}")
    value = 0
    for t in block:
        if t not in (0, 1, 2):
            raise ValueError(f"invalid trit {t!r}")
        value = value * 3 + t
    return table.char(value)


def capacity_chars(n_elements: int) -> int:
    """Characters that fit in ``n_elements`` next to one anchor."""
    return max((n_elements - BLOCK) // BLOCK, 0)


def encode_message(
    msg: str,
    capacity_elements: int,
    table: CharTable = DEFAULT_TABLE,
    circular: bool = True,
) -> TritString:
    """Anchor followed by the message blocks, repeated whole as often as fits."""
    if not msg:
        raise EmptyMessage("message is empty")
    payload = [t for c in msg for t in char_to_trits(c, table)]
    unit = list(ANCHOR) + payload
    if len(unit) > capacity_elements:
        raise MessageTooLong(
            f"{len(msg)} characters need {len(unit)} elements, "
            f"only {capacity_elements} available"
        )
    reps = capacity_elements // len(unit)
    return TritString(tuple(unit * reps), circular=circular)


class Parse(NamedTuple):
    message: str
    offset: int
    reversed: bool
    support: int = 0  # trits in whole repeated copies of the unit
    tail: int = 0  # trits in a trailing partial copy


def _as_str(trits: Iterable[int]) -> str:
    return "".join("012"[t] for t in trits)


def _parse_at(s: str, table: CharTable) -> tuple[str, int] | None:
    """``(message, unit length)`` if ``s`` is an anchored periodic stream."""
    n = len(s)
    p = 0
    for q in range(BLOCK, n - BLOCK + 1, BLOCK):
        if s.startswith(_ANCHOR_STR, q):
            p = q
            break
    if not p:
        p = n - n % BLOCK
    if p < 2 * BLOCK:
        return None
    unit = s[:p]
    reps = -(-n // p)
    if (unit * reps)[:n] != s:
        return None
    chars = []
    for q in range(BLOCK, p, BLOCK):
        value = int(unit[q:q + BLOCK], 3)
        try:
            chars.append(table.char(value))
        except UnmappedValue as exc:
            raise InvalidBlock(f"block {unit[q:q + BLOCK]} at {q}: {exc}") from None
    return "".join(chars), p


def parse_candidates(ts: TritString | Sequence[int], table: CharTable = DEFAULT_TABLE,
                     circular: bool | None = None, starts: Collection[int] | None = None,
                     reverse_starts: Collection[int] | None = None,
                     directions: Sequence[bool] = (False, True)) -> list[Parse]:
    """Every valid parse of the stream, best supported first.

    ``starts`` and ``reverse_starts`` optionally restrict where the anchor's
    first trit may sit (stream indices as given) when reading forward and
    backward. Raises InvalidBlock only if an anchor was found and every
    anchored reading hit an unmapped block.
    """
    if circular is None:
        circular = ts.circular if isinstance(ts, TritString) else True
    trits = tuple(ts)
    n = len(trits)
    if n < 2 * BLOCK:
        raise NoAnchorFound(f"stream of {n} trits is too short to hold a code")
    out: list[Parse] = []
    invalid: InvalidBlock | None = None
    for rev in directions:
        s = _as_str(reversed(trits) if rev else trits)
        allowed = reverse_starts if rev else starts
        if circular:
            doubled = s + s[:BLOCK - 1]
            cand = [i for i in range(n) if doubled.startswith(_ANCHOR_STR, i)]
        else:
            cand = [0] if s.startswith(_ANCHOR_STR) else []
        for r in cand:
            offset = n - 1 - r if rev else r
            if allowed is not None and offset not in allowed:
                continue
            try:
                got = _parse_at(s[r:] + s[:r], table)
            except InvalidBlock as exc:
                invalid = exc
                continue
            if got is not None:
                out.append(Parse(got[0], offset, rev, (n // got[1] - 1) * got[1], n % got[1]))
    if not out and invalid is not None:
        raise invalid
    out.sort(key=lambda p: -p.support)
    return out


def parse_trit_stream(ts: TritString | Sequence[int], table: CharTable = DEFAULT_TABLE,
                      circular: bool | None = None) -> Parse:
    """Locate the anchor and decode, returning where and how it was read.

    Circular streams are tried at every rotation; all streams are tried in
    both reading directions. A parse is valid when the stream read from the
    anchor is the anchor+payload unit repeated (the tail may be a partial
    copy). Readings with more whole repeated copies take precedence; distinct
    messages with equal support are ambiguous.
    ``offset`` indexes the anchor's first trit in the stream as given.
    """
    found = parse_candidates(ts, table, circular)
    if not found:
        raise NoAnchorFound("no anchored, self-consistent parse in stream")
    best = [p for p in found if p.support == found[0].support]
    messages = sorted({p.message for p in best})
    if len(messages) > 1:
        raise AmbiguousAnchor(f"stream parses as {messages!r}")
    return best[0]


def decode_trit_stream(ts: TritString | Sequence[int], table: CharTable = DEFAULT_TABLE,
                       circular: bool | None = None) -> str:
    return parse_trit_stream(ts, table, circular).message
