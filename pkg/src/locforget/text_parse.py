"""Rule-based tokenizer, lexicon tagger and noun-chunk parser for caption-style English.

The grammar is deliberately small: determiner + modifiers + head noun, optionally
followed by prepositional phrases, coordinations and post-nominal participles
("a car parked on a street").  That covers scene captions and edit prompts; it is
not a general English parser.
"""
from __future__ import annotations

import enum
import functools
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import LexiconLoadError, NoChunkFound


class POS(str, enum.Enum):
    DET = "DET"
    ADJ = "ADJ"
    NOUN = "NOUN"
    VERB = "VERB"
    ADP = "ADP"
    NUM = "NUM"
    OTHER = "OTHER"


class Relation(str, enum.Enum):
    SUBJECT = "SUBJECT"
    OBJECT_OF_PREPOSITION = "OBJECT_OF_PREPOSITION"
    OTHER = "OTHER"


@dataclass(frozen=True)
class Token:
    surface: str
    lemma: str
    pos: POS | None
    index: int
    # punctuation (comma, semicolon, ...) was dropped right before this token
    break_before: bool = False


# suffix -> POS, tried in order; the empty suffix makes the list total
DEFAULT_FALLBACK_RULES: tuple[tuple[str, POS], ...] = (
    ("ing", POS.VERB),
    ("ed", POS.VERB),
    ("ly", POS.OTHER),
    ("ous", POS.ADJ),
    ("ful", POS.ADJ),
    ("ive", POS.ADJ),
    ("ish", POS.ADJ),
    ("able", POS.ADJ),
    ("", POS.NOUN),
)

COORDINATORS = frozenset({"and", "or"})
_PARTICIPLE_ENDINGS = ("ing", "ed", "en", "wn")


@dataclass
class Lexicon:
    entries: dict[str, tuple[str, POS]]
    fallback_rules: tuple[tuple[str, POS], ...] = DEFAULT_FALLBACK_RULES

    def __post_init__(self):
        for surface, (lemma, pos) in self.entries.items():
            if lemma != surface and lemma not in self.entries:
                raise LexiconLoadError(
                    f"lemma {lemma!r} of {surface!r} is neither an entry nor terminal")
        if not self.fallback_rules or self.fallback_rules[-1][0] != "":
            raise LexiconLoadError("fallback rules must end with a catch-all rule")

    @classmethod
    def from_tsv(cls, text: str, source: str = "<string>") -> "Lexicon":
        entries: dict[str, tuple[str, POS]] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise LexiconLoadError(f"{source}:{lineno}: expected 3 tab-separated fields")
            surface, lemma, pos = (p.strip() for p in parts)
            if not surface or not lemma:
                raise LexiconLoadError(f"{source}:{lineno}: empty surface or lemma")
            try:
                tag = POS(pos)
            except ValueError:
                raise LexiconLoadError(f"{source}:{lineno}: unknown POS {pos!r}") from None
            entries.setdefault(surface.lower(), (lemma.lower(), tag))
        return cls(entries)

    @classmethod
    def load(cls, path: str | Path) -> "Lexicon":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise LexiconLoadError(f"cannot read lexicon {path}: {exc}") from exc
        return cls.from_tsv(text, str(path))

    def extended(self, extra: dict[str, tuple[str, POS]]) -> "Lexicon":
        return Lexicon({**self.entries, **extra}, self.fallback_rules)

    def lookup(self, word: str) -> tuple[str, POS]:
        w = word.lower()
        if w in self.entries:
            return self.entries[w]
        if w.endswith("'s") and w[:-2] in self.entries:
            return self.entries[w[:-2]]
        if w.isdigit():
            return w, POS.NUM
        base = _strip_plural_known(w, self.entries)
        if base is not None:
            return self.entries[base][0], POS.NOUN
        pos = next(p for suffix, p in self.fallback_rules
                   if w.endswith(suffix) and len(w) > len(suffix))
        return (_strip_plural_guess(w) if pos is POS.NOUN else w), pos


def _strip_plural_known(w: str, entries) -> str | None:
    for suffix in ("es", "s"):
        if w.endswith(suffix) and len(w) > len(suffix) + 1:
            base = w[: -len(suffix)]
            if base in entries and entries[base][1] is POS.NOUN:
                return base
    return None


def _strip_plural_guess(w: str) -> str:
    if w.endswith("'s"):
        w = w[:-2]
    if len(w) > 3 and w.endswith("s") and not w.endswith(("ss", "us", "is")):
        return w[:-1]
    return w


@functools.lru_cache(maxsize=1)
def default_lexicon() -> Lexicon:
    text = resources.files("locforget.data").joinpath("lexicon.tsv").read_text(encoding="utf-8")
    return Lexicon.from_tsv(text, "lexicon.tsv")


_WORD = re.compile(r"\w+(?:['\-]\w+)*", re.UNICODE)
_BREAK_PUNCT = re.compile(r"[,;:()\"!?]")


def tokenize(text: str) -> list[Token]:
    """Split on whitespace and punctuation; punctuation itself is dropped."""
    tokens = []
    last_end = 0
    for i, m in enumerate(_WORD.finditer(text)):
        gap = text[last_end:m.start()]
        brk = bool(tokens) and bool(_BREAK_PUNCT.search(gap) or "." in gap)
        tokens.append(Token(m.group(), m.group().lower(), None, i, brk))
        last_end = m.end()
    return tokens


def tag_pos(tokens: Sequence[Token], lexicon: Lexicon | None = None) -> list[Token]:
    lex = lexicon or default_lexicon()
    out = []
    for tok in tokens:
        lemma, pos = lex.lookup(tok.surface)
        out.append(Token(tok.surface, lemma, pos, tok.index, tok.break_before))
    return out


def is_participle(tok: Token) -> bool:
    return tok.pos is POS.VERB and tok.surface.lower().endswith(_PARTICIPLE_ENDINGS)


@dataclass(frozen=True)
class Chunk:
    root: Token
    children: frozenset[Token] = field(default_factory=frozenset)
    relation: Relation = Relation.OTHER

    def __post_init__(self):
        if self.root.pos is not POS.NOUN:
            raise ValueError(f"chunk root must be a NOUN, got {self.root}")
        if any(c.index == self.root.index for c in self.children):
            raise ValueError("root token cannot be its own child")
        if any(c.pos is POS.DET for c in self.children):
            raise ValueError("determiners are never chunk children")

    def modifier_lemmas(self) -> list[str]:
        """Distinct child lemmas in surface order."""
        seen: list[str] = []
        for tok in sorted(self.children, key=lambda t: t.index):
            if tok.lemma not in seen:
                seen.append(tok.lemma)
        return seen

    def phrase(self) -> str:
        return " ".join([*self.modifier_lemmas(), self.root.lemma])

    def to_dict(self) -> dict:
        return {"root": self.root.lemma, "children": self.modifier_lemmas(),
                "relation": self.relation.value}


@dataclass(frozen=True)
class ChunkSet:
    chunks: tuple[Chunk, ...]
    source_text: str = ""

    def roots(self) -> list[str]:
        return [c.root.lemma for c in self.chunks]

    def get(self, lemma: str) -> Chunk | None:
        for c in self.chunks:
            if c.root.lemma == lemma:
                return c
        return None

    def phrases(self) -> list[str]:
        return [c.phrase() for c in self.chunks]

    def __len__(self):
        return len(self.chunks)

    def to_dict(self) -> dict:
        return {"text": self.source_text, "chunks": [c.to_dict() for c in self.chunks]}


def raw_chunks(tokens: Sequence[Token]) -> list[Chunk]:
    """Greedy left-to-right chunking, before duplicate roots are merged."""
    chunks: list[Chunk] = []
    pending: list[Token] = []
    nouns: list[Token] = []
    after_adp = False
    coordinated = False
    have_subject = False

    def close():
        nonlocal pending, nouns, after_adp, coordinated, have_subject
        if nouns:
            if after_adp:
                rel = Relation.OBJECT_OF_PREPOSITION
            elif coordinated and chunks:
                rel = chunks[-1].relation
            elif not have_subject:
                rel = Relation.SUBJECT
            else:
                rel = Relation.OTHER
            have_subject = have_subject or rel is Relation.SUBJECT
            kids = [t for t in pending if t.pos is not POS.DET] + nouns[:-1]
            chunks.append(Chunk(nouns[-1], frozenset(kids), rel))
            after_adp = coordinated = False
        pending, nouns = [], []

    for tok in tokens:
        if tok.break_before:
            close()
            coordinated = True
        pos = tok.pos
        if pos is POS.NOUN:
            nouns.append(tok)
        elif pos in (POS.DET, POS.ADJ, POS.NUM) or is_participle(tok):
            if nouns:
                close()
                if is_participle(tok):
                    # post-nominal participle modifies the noun just closed
                    prev = chunks[-1]
                    chunks[-1] = Chunk(prev.root, prev.children | {tok}, prev.relation)
                    continue
            pending.append(tok)
        elif pos is POS.ADP:
            close()
            after_adp = True
        elif pos is POS.OTHER and tok.lemma in COORDINATORS:
            close()
            coordinated = True
        else:
            close()
    close()
    return chunks


def merge_chunks(chunks: Iterable[Chunk], source_text: str = "") -> ChunkSet:
    merged: dict[str, Chunk] = {}
    for c in chunks:
        key = c.root.lemma
        if key in merged:
            first = merged[key]
            kids = frozenset(k for k in first.children | c.children if k.index != first.root.index)
            merged[key] = Chunk(first.root, kids, first.relation)
        else:
            merged[key] = c
    return ChunkSet(tuple(merged.values()), source_text)


def parse_chunks(tokens: Sequence[Token], source_text: str | None = None) -> ChunkSet:
    if source_text is None:
        source_text = " ".join(t.surface for t in tokens)
    chunks = raw_chunks(tokens)
    if not chunks:
        raise NoChunkFound(f"no noun found in {source_text!r}")
    return merge_chunks(chunks, source_text)


def parse(text: str, lexicon: Lexicon | None = None) -> ChunkSet:
    return parse_chunks(tag_pos(tokenize(text), lexicon), text)


def load_gold_corpus(path: str | Path | None = None) -> list[dict]:
    if path is None:
        raw = resources.files("locforget.data").joinpath("gold_corpus.json").read_text(encoding="utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    return json.loads(raw)


def gold_mismatches(chunkset: ChunkSet, gold: dict) -> list[str]:
    """Empty list iff roots, child lemma sets and relations match the gold entry exactly."""
    got = [c.to_dict() for c in chunkset.chunks]
    want = gold["chunks"]
    problems = []
    if [g["root"] for g in got] != [w["root"] for w in want]:
        problems.append(f"roots {[g['root'] for g in got]} != {[w['root'] for w in want]}")
        return problems
    for g, w in zip(got, want):
        if set(g["children"]) != set(w["children"]):
            problems.append(f"{g['root']}: children {sorted(g['children'])} != {sorted(w['children'])}")
        if g["relation"] != w["relation"]:
            problems.append(f"{g['root']}: relation {g['relation']} != {w['relation']}")
    return problems
