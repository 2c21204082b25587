"""Translations between processes and structures, structure classifiers,
and the environment/action maps.

The process map is the usual isomorphism: the inactive process is the
unit, a prefix is a Seq, parallel composition is Par, restriction is the
quantifier.  An environment structure is a canonical list of labels,
possibly under quantifiers that scope over suffixes of the list; it
records the messages exchanged with the environment.  Because an atom
only ever annihilates against its complement, the environment structure
for an observable action carries the complementary label: turning an
action sequence into an environment structure complements each label,
and reading an environment structure back complements again (bound
labels read as silent).
"""

from __future__ import annotations

from dataclasses import dataclass

from .calculus import (
    AI_DOWN, AI_DOWN_LEFT, Derivation, DerivationError, check_derivation,
)
from .ccsr import (
    TAU, Action, ActionSeq, PNu, PPar, PPrefix, Process, PZero, SILENT, ZERO,
    actions_normalize,
)
from .structures import (
    Atom, CoPar, Name, Not, ONE, One, Par, Sdq, Seq, Structure,
    canonicalize, is_tensor_free, mk_seq, names,
)


class BridgeError(ValueError):
    pass


def to_structure(e: Process) -> Structure:
    """The isomorphic image of a process; returned raw, not canonical."""
    if isinstance(e, PZero):
        return ONE
    if isinstance(e, PPrefix):
        return Seq((Atom(e.label), to_structure(e.body)))
    if isinstance(e, PPar):
        return Par((to_structure(e.left), to_structure(e.right)))
    if isinstance(e, PNu):
        return Sdq(e.name, to_structure(e.body))
    raise TypeError(f"not a process: {e!r}")


def from_structure(s: Structure) -> Process:
    """Inverse of the process map on process structures."""
    if isinstance(s, One):
        return ZERO
    if isinstance(s, Atom):
        return PPrefix(s.name, ZERO)
    if isinstance(s, Seq):
        head = s.parts[0]
        if not isinstance(head, Atom):
            raise BridgeError("a Seq in a process structure starts with a label")
        return PPrefix(head.name, from_structure(mk_seq(s.parts[1:])))
    if isinstance(s, Par):
        out = from_structure(s.parts[-1])
        for p in reversed(s.parts[:-1]):
            out = PPar(from_structure(p), out)
        return out
    if isinstance(s, Sdq):
        return PNu(s.binder, from_structure(s.body))
    if isinstance(s, CoPar):
        raise BridgeError("CoPar does not occur in process structures")
    if isinstance(s, Not):
        raise BridgeError("negation does not occur in process structures")
    raise TypeError(f"not a structure: {s!r}")


# ---------------------------------------------------------------------------
# classifiers (all decided on the canonical form)
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class StructureKinds:
    is_process: bool
    is_environment: bool
    is_simple: bool
    is_invertible: bool
    is_tensor_free: bool

    def as_dict(self) -> dict:
        return {
            "isProcess": self.is_process,
            "isEnvironment": self.is_environment,
            "isSimple": self.is_simple,
            "isInvertible": self.is_invertible,
            "isTensorFree": self.is_tensor_free,
        }


def _is_process_shape(s: Structure) -> bool:
    if isinstance(s, (One, Atom)):
        return True
    if isinstance(s, Seq):
        return all(isinstance(p, Atom) for p in s.parts[:-1]) and \
            _is_process_shape(s.parts[-1])
    if isinstance(s, Par):
        return all(_is_process_shape(p) for p in s.parts)
    if isinstance(s, Sdq):
        return _is_process_shape(s.body)
    return False


def _is_env_shape(s: Structure) -> bool:
    if isinstance(s, Atom):
        return True
    if isinstance(s, Sdq):
        return _is_env_shape(s.body)
    if isinstance(s, Seq):
        return all(isinstance(p, Atom) for p in s.parts[:-1]) and \
            _is_env_shape(s.parts[-1])
    return False


def _is_simple_shape(s: Structure) -> bool:
    if isinstance(s, (One, Atom)):
        return True
    if isinstance(s, Par):
        return all(_is_simple_shape(p) for p in s.parts)
    if isinstance(s, Sdq):
        return _is_simple_shape(s.body)
    return False


def _no_complement_pair(s: Structure) -> bool:
    free, bound = names(s)
    occurring = {n for n in free | bound}
    return not any(n.complement() in occurring for n in occurring)


def _is_invertible_shape(s: Structure) -> bool:
    if isinstance(s, (One, Atom)):
        return True
    if isinstance(s, Par):
        return all(isinstance(p, Atom) for p in s.parts) and _no_complement_pair(s)
    if isinstance(s, CoPar):
        return all(_is_invertible_shape(p) for p in s.parts)
    if isinstance(s, Sdq):
        return _is_invertible_shape(s.body)
    return False


def classify_structure(s: Structure) -> StructureKinds:
    c = canonicalize(s)
    simple = _is_simple_shape(c) and _no_complement_pair(c)
    return StructureKinds(
        is_process=_is_process_shape(c),
        is_environment=isinstance(c, One) or _is_env_shape(c),
        is_simple=simple,
        is_invertible=_is_invertible_shape(c),
        is_tensor_free=is_tensor_free(c),
    )


# ---------------------------------------------------------------------------
# environment structures <-> action sequences
# ---------------------------------------------------------------------------

def env_to_actions(s: Structure, hidden: frozenset[Name] = frozenset()) -> ActionSeq:
    """Read an environment structure as the action sequence it lets the
    process perform: each free label contributes the complementary
    action, labels under a quantifier (or in ``hidden``) are silent."""
    c = canonicalize(s)
    if not (isinstance(c, One) or _is_env_shape(c)):
        raise BridgeError("not an environment structure")

    items: list[Action] = []

    def walk(t: Structure, hid: frozenset[Name]) -> None:
        if isinstance(t, One):
            items.append(TAU)
        elif isinstance(t, Atom):
            items.append(TAU if t.name in hid else t.name.complement())
        elif isinstance(t, Seq):
            for p in t.parts:
                walk(p, hid)
        elif isinstance(t, Sdq):
            walk(t.body, hid | {Name(t.binder.base, True),
                                Name(t.binder.base, False)})

    walk(c, frozenset(hidden))
    return actions_normalize(tuple(items))


def actions_to_env(alpha: ActionSeq) -> Structure:
    """The canonical environment structure whose reading is ``alpha``: the
    right-nested Seq of the complemented labels; silent collapses to the
    unit."""
    norm = actions_normalize(alpha)
    if norm == SILENT:
        return ONE
    if any(a is TAU for a in norm):
        raise BridgeError("normalize the action sequence first")
    return canonicalize(mk_seq([Atom(a.complement()) for a in norm]))


# ---------------------------------------------------------------------------
# trivial derivations
# ---------------------------------------------------------------------------

def is_trivial_derivation(d: Derivation) -> bool:
    """Tensor-free and free of atomic interactions: no communication."""
    if not check_derivation(d):
        raise DerivationError("invalid derivation")
    if any(st.rule in (AI_DOWN, AI_DOWN_LEFT) for st in d.steps):
        return False
    return all(is_tensor_free(s) for s in d.structures())
