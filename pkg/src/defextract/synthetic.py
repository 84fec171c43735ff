"""Seeded generator for small synthetic definition corpora.

Sentences follow scholarly-looking templates built around definitional cues
("is", "is defined as", "refers to", "denotes", "defines") plus
non-definitional filler sentences. Used for smoke tests, the learnability
check and the heuristic-recovery experiment.
"""

from __future__ import annotations

import random

from .corpus import Dataset, Sentence, SlotTag

TERMS = [
    "textual entailment",
    "coreference resolution",
    "semantic role labeling",
    "word sense disambiguation",
    "question answering",
    "sentiment analysis",
    "named entity recognition",
    "dependency parsing",
    "machine translation",
    "language modeling",
    "graph-based operator",
    "forward language model",
    "backward LM",
    "contextual embedding",
    "attention layer",
    "scalar mix",
    "character encoder",
    "span representation",
    "biLM",
    "WSD",
    "SRL",
    "NER",
    "LSTM",
    "SQuAD",
    "$s^{task}$",
    "$h_{k}$",
    "$\\gamma^{task}$",
    "$x_{t}$",
    "$L$",
]

DEF_HEADS = [
    "the task of determining",
    "the problem of clustering",
    "a method for predicting",
    "a model for estimating",
    "a procedure for selecting",
    "the process of labeling",
    "a set of weights for combining",
    "a function for scoring",
    "a transformation for mapping",
    "the technique of encoding",
]

DEF_OBJECTS = [
    "mentions in text",
    "the predicate-argument structure of a sentence",
    "the probability of a token given its history",
    "softmax-normalized layer outputs",
    "entities in newswire",
    "answers to questions over a paragraph",
    "the polarity of a review",
    "syntactic heads of each word",
    "sentences from one language to another",
    "hidden states of a recurrent network",
    "the context around a pivot word",
    "spans of a given document",
]

ADJECTIVES = [
    "neural", "bidirectional", "latent", "sparse", "contextual", "linear", "recurrent", "shallow",
    "probabilistic", "discrete", "hierarchical", "pretrained", "small", "lexical", "joint", "formal",
]

NOUNS = [
    "network", "model", "encoder", "representation", "distribution", "vector", "matrix", "classifier",
    "graph", "sequence", "parser", "corpus", "feature", "label", "layer", "function", "score",
    "sentence", "document", "token", "claim", "premise", "statement", "hypothesis", "context", "answer",
]

VERBS = ["encodes", "maps", "predicts", "combines", "scores", "ranks", "selects", "summarizes"]

PREFIXES = [[], [], [], ["In", "this", "paper", ","], ["Formally", ","], ["Here", ","]]

CUES = [
    ["is"],
    ["is"],
    ["is", "defined", "as"],
    ["refers", "to"],
    ["denotes"],
    ["defines"],
]

NEGATIVE_TEMPLATES = [
    "We evaluate the {np} on three benchmarks CITATION .",
    "Results for the {np} are shown in TABLE .",
    "The {np} improves over the baseline by two points .",
    "We train the {np} for ten epochs with a batch size of 32 .",
    "As shown in FIGURE , the {np} converges quickly .",
    "We describe the {np} in SECTION .",
    "Our implementation of the {np} follows CITATION .",
    "The {np} was tuned on the development set .",
    "The {np} is trained on the data of CITATION .",
    "Details of the {np} are given in SECTION .",
]


def _words(s: str) -> list[str]:
    return s.split()


def _span_tags(n: int, kind: str) -> list[SlotTag]:
    return [SlotTag.begin(kind)] + [SlotTag.inside(kind)] * (n - 1)


def noun_phrase(rng: random.Random, quoted: bool = False) -> list[str]:
    det = rng.choice(["a", "the", "a", "each"])
    adjs = rng.sample(ADJECTIVES, rng.choice([0, 1, 1, 2]))
    noun = rng.choice(NOUNS)
    head = (adjs or [noun])[0]
    if det == "a" and head[0] in "aeiou":
        det = "an"
    return [det] + adjs + [f"'{noun}'" if quoted else noun]


def definition_words(rng: random.Random) -> list[str]:
    """A definition body: a fixed head plus object, a generic noun phrase
    with an optional relative clause, or a "whether X is Y" clause."""
    style = rng.random()
    if style < 0.4:
        return _words(rng.choice(DEF_HEADS)) + _words(rng.choice(DEF_OBJECTS))
    if style < 0.75:
        words = noun_phrase(rng)
        if rng.random() < 0.6:
            words += ["that", rng.choice(VERBS)] + noun_phrase(rng)
        if rng.random() < 0.3:
            words += ["of", rng.choice(NOUNS) + "s"]
        return words
    quoted = rng.random() < 0.5
    words = _words(rng.choice(["the task of determining whether", "the problem of deciding whether", "a test of whether"]))
    words += noun_phrase(rng, quoted) + ["is", rng.choice(["true", "valid", "entailed", "consistent"])]
    if rng.random() < 0.6:
        words += [",", "given"] + noun_phrase(rng, quoted)
    return words


def definitional_sentence(rng: random.Random, cues=CUES, prefixes=PREFIXES) -> tuple[list[str], list[SlotTag]]:
    term = _words(rng.choice(TERMS))
    cue = rng.choice(cues)
    definition = definition_words(rng)
    prefix = list(rng.choice(prefixes))
    words, tags = list(prefix), [SlotTag.O] * len(prefix)
    if cue == ["defines"]:
        words.append("A" if not prefix else "a")
        tags.append(SlotTag.O)
    words += term
    tags += _span_tags(len(term), "TERM")
    words += cue
    tags += [SlotTag.O] * len(cue)
    words += definition
    tags += _span_tags(len(definition), "DEF")
    words.append(".")
    tags.append(SlotTag.O)
    if words[0][:1].isalpha() and words[0].islower():
        words[0] = words[0].capitalize()
    return words, tags


def negative_sentence(rng: random.Random) -> tuple[list[str], list[SlotTag]]:
    np_words = rng.choice([t for t in TERMS if not t.startswith("$")])
    words = _words(rng.choice(NEGATIVE_TEMPLATES).format(np=np_words))
    return words, [SlotTag.O] * len(words)


def generate_cue_corpus(n: int = 200, seed: int = 0, negative_rate: float = 0.3, name: str = "synthetic_cue") -> Dataset:
    rng = random.Random(seed)
    sentences = []
    for i in range(n):
        if rng.random() < negative_rate:
            words, tags = negative_sentence(rng)
        else:
            words, tags = definitional_sentence(rng)
        sentences.append(Sentence.from_words(words, tags, None, i))
    return Dataset(tuple(sentences), name)


def separable_corpus(n: int = 20, seed: int = 0) -> Dataset:
    """Every sentence is ``TERM is DEF .`` with no prefix."""
    rng = random.Random(seed)
    sentences = []
    for i in range(n):
        words, tags = definitional_sentence(rng, cues=[["is"]], prefixes=[[]])
        sentences.append(Sentence.from_words(words, tags, None, i))
    return Dataset(tuple(sentences), "separable")


def load_shipped_corpus() -> Dataset:
    """The 200-sentence cue corpus bundled with the package."""
    from importlib import resources

    from .corpus import parse_conll

    text = resources.files("defextract").joinpath("data/synthetic_cue.conll").read_text("utf-8")
    return parse_conll(text, "synthetic_cue")[0]


def corrupt_tags(tags, rng: random.Random, flip_rate: float = 0.2, delete_rate: float = 0.1) -> list[SlotTag]:
    """Simulate a noisy tagger.

    Interior inside tags (an ``I-X`` followed by another ``I-X``) are set to
    O with probability ``delete_rate``; then every remaining non-O tag has its
    B/I marker swapped with probability ``flip_rate``.
    """
    tags = [SlotTag(t) for t in tags]
    out = list(tags)
    for i, t in enumerate(tags):
        if t.is_inside and i + 1 < len(tags) and tags[i + 1] == t and rng.random() < delete_rate:
            out[i] = SlotTag.O
    for i, t in enumerate(out):
        if t is not SlotTag.O and rng.random() < flip_rate:
            out[i] = SlotTag.inside(t.kind) if t.is_begin else SlotTag.begin(t.kind)
    return out


def corrupt_dataset(dataset: Dataset, seed: int = 0, flip_rate: float = 0.2, delete_rate: float = 0.1) -> list[list[SlotTag]]:
    rng = random.Random(seed)
    return [corrupt_tags(s.gold_tags, rng, flip_rate, delete_rate) for s in dataset]
