"""Edit-intent localisation: diff a scene caption against an edit prompt.

Two directions are supported for the attribute diff when caption and prompt
share an entity:

* ``IMAGE_RESIDUAL`` (default) forgets the caption's old attributes
  (caption "a red car", prompt "a yellow car" -> forget "red car").
* ``PAPER_LITERAL`` forgets ``prompt.children - caption.children`` exactly as
  the locating listing is printed, which yields "yellow car" for the same pair,
  i.e. it may forget the very phrase it also guides towards.  Only the residual
  mode filters forgetting elements that coincide with a positive concept.

When the two share no entity at all, every caption chunk is forgotten.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

from .errors import EmptyPrompt, RootMismatch
from .text_parse import Chunk, ChunkSet, Token, parse


class LocateMode(str, enum.Enum):
    PAPER_LITERAL = "PAPER_LITERAL"
    IMAGE_RESIDUAL = "IMAGE_RESIDUAL"


class Rule(str, enum.Enum):
    SUBJECT_CHANGE = "SUBJECT_CHANGE"
    ATTRIBUTE_DIFF = "ATTRIBUTE_DIFF"


@dataclass(frozen=True)
class Provenance:
    element: str
    source: str  # "caption" or "prompt"
    chunk: dict
    rule: Rule

    def to_dict(self):
        return {"element": self.element, "source": self.source,
                "chunk": self.chunk, "rule": self.rule.value}


@dataclass
class EditPlan:
    positive_concepts: list[str]
    forgetting_elements: list[str]
    mode: LocateMode = LocateMode.IMAGE_RESIDUAL
    provenance: list[Provenance] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "positive_concepts": list(self.positive_concepts),
            "forgetting_elements": list(self.forgetting_elements),
            "mode": self.mode.value,
            "provenance": [p.to_dict() for p in self.provenance],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "EditPlan":
        prov = [Provenance(p["element"], p["source"], p["chunk"], Rule(p["rule"]))
                for p in d.get("provenance", [])]
        return cls(list(d["positive_concepts"]), list(d["forgetting_elements"]),
                   LocateMode(d.get("mode", LocateMode.IMAGE_RESIDUAL.value)), prov)


def get_common_chunk(caption: ChunkSet, prompt: ChunkSet) -> list[str]:
    """Root lemmas present in both chunk sets, in caption order."""
    prompt_roots = set(prompt.roots())
    return [r for r in caption.roots() if r in prompt_roots]


def diff_modifiers(i_chunk: Chunk, p_chunk: Chunk,
                   mode: LocateMode = LocateMode.IMAGE_RESIDUAL) -> set[Token]:
    if i_chunk.root.lemma != p_chunk.root.lemma:
        raise RootMismatch(f"{i_chunk.root.lemma!r} != {p_chunk.root.lemma!r}")
    if mode is LocateMode.PAPER_LITERAL:
        keep, drop = p_chunk.children, i_chunk.children
    else:
        keep, drop = i_chunk.children, p_chunk.children
    dropped = {t.lemma for t in drop}
    return {t for t in keep if t.lemma not in dropped}


def locate(caption: ChunkSet, prompt: ChunkSet,
           mode: LocateMode | str = LocateMode.IMAGE_RESIDUAL) -> EditPlan:
    mode = LocateMode(mode)
    if len(prompt) == 0:
        raise EmptyPrompt("prompt has no chunks")
    positive = prompt.phrases()
    forgetting: list[str] = []
    provenance: list[Provenance] = []

    def emit(phrase, source, chunk, rule):
        # the literal direction can forget the prompt's own phrase; keep it visible there
        if phrase in forgetting or (mode is LocateMode.IMAGE_RESIDUAL and phrase in positive):
            return
        forgetting.append(phrase)
        provenance.append(Provenance(phrase, source, chunk.to_dict(), rule))

    common = get_common_chunk(caption, prompt)
    if not common:
        for chunk in caption.chunks:
            emit(chunk.phrase(), "caption", chunk, Rule.SUBJECT_CHANGE)
    else:
        for lemma in common:
            i_chunk, p_chunk = caption.get(lemma), prompt.get(lemma)
            mods = sorted(diff_modifiers(i_chunk, p_chunk, mode), key=lambda t: t.index)
            source, chunk = (("prompt", p_chunk) if mode is LocateMode.PAPER_LITERAL
                             else ("caption", i_chunk))
            seen = set()
            for tok in mods:
                if tok.lemma in seen:
                    continue
                seen.add(tok.lemma)
                emit(f"{tok.lemma} {lemma}", source, chunk, Rule.ATTRIBUTE_DIFF)
    return EditPlan(positive, forgetting, mode, provenance)


def locate_text(caption: str, prompt: str,
                mode: LocateMode | str = LocateMode.IMAGE_RESIDUAL, lexicon=None) -> EditPlan:
    """Parse both texts and locate.  An empty caption yields an empty forgetting set."""
    if not prompt.strip():
        raise EmptyPrompt("prompt is empty")
    prompt_cs = parse(prompt, lexicon)
    caption_cs = parse(caption, lexicon) if caption.strip() else ChunkSet((), caption)
    return locate(caption_cs, prompt_cs, mode)
