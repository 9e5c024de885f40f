"""Corpus data model: entities, QA pairs, reference summaries.

Handles JSONL ingestion with validation, deterministic tokenization and
splitting, and dataset statistics (word counts, novel n-grams, compression
ratio).
"""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .rng import SplitMix64

FORMAT_VERSION = 1

QA_PAIRS_FILE = "qa_pairs.jsonl"
SUMMARIES_FILE = "summaries.jsonl"


class CorpusError(Exception):
    """Base class for corpus ingestion/validation failures."""


class CorpusParseError(CorpusError):
    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class IntegrityError(CorpusError):
    """Referential-integrity violation; names the dangling id."""

    def __init__(self, message: str, dangling_id: str):
        super().__init__(message)
        self.dangling_id = dangling_id


class DuplicateIdError(CorpusError):
    def __init__(self, message: str, duplicate_id: str):
        super().__init__(message)
        self.duplicate_id = duplicate_id


@dataclass
class Entity:
    id: str
    name: str
    category: str


@dataclass
class QAPair:
    id: str
    entity_id: str
    question_id: str
    question: str
    answer: str
    is_seed: bool | None = None


@dataclass
class SummaryRecord:
    entity_id: str
    reference_summary: str
    raw_summary: str | None = None


@dataclass
class Corpus:
    """Immutable-after-load container; all operations on it are pure."""

    entities: list[Entity]
    qa_pairs: list[QAPair]
    summaries: list[SummaryRecord]

    def __post_init__(self):
        self._entity_by_id = {e.id: e for e in self.entities}
        self._qas_by_entity: dict[str, list[QAPair]] = defaultdict(list)
        for qa in self.qa_pairs:
            self._qas_by_entity[qa.entity_id].append(qa)
        self._summary_by_entity = {s.entity_id: s for s in self.summaries}

    def entity(self, entity_id: str) -> Entity:
        return self._entity_by_id[entity_id]

    def has_entity(self, entity_id: str) -> bool:
        return entity_id in self._entity_by_id

    def qas_for(self, entity_id: str) -> list[QAPair]:
        return list(self._qas_by_entity.get(entity_id, []))

    def summary_for(self, entity_id: str) -> SummaryRecord | None:
        return self._summary_by_entity.get(entity_id)

    def entity_ids(self) -> list[str]:
        return [e.id for e in self.entities]


@dataclass
class CorpusSplit:
    train: list[str]
    val: list[str]
    test: list[str]
    seed: int


@dataclass
class CategoryStats:
    entity_count: int
    avg_input_words: float
    avg_raw_summary_words: float | None
    avg_ref_summary_words: float | None
    novel_ngram_pct: dict[int, float] | None
    compression_ratio_pct: float | None


@dataclass
class CorpusStats:
    per_category: dict[str, CategoryStats]
    overall: CategoryStats


# --------------------------------------------------------------------------
# Tokenization and n-grams
# --------------------------------------------------------------------------

def tokenize(text: str) -> list[str]:
    """Lowercase, split on Unicode whitespace, split off punctuation.

    Word characters are Unicode alphanumerics; every other non-whitespace
    character becomes a token of its own ("u.s." -> u . s .).
    """
    tokens: list[str] = []
    for chunk in text.lower().split():
        run = []
        for ch in chunk:
            if ch.isalnum():
                run.append(ch)
            else:
                if run:
                    tokens.append("".join(run))
                    run = []
                tokens.append(ch)
        if run:
            tokens.append("".join(run))
    return tokens


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    """Contiguous n-token windows with multiplicities."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def novel_ngram_pct(summary_tokens: Sequence[str], input_tokens: Sequence[str], n: int) -> float:
    """Percent of the summary's distinct n-grams absent from the input."""
    summary_grams = set(ngrams(summary_tokens, n))
    if not summary_grams:
        return 0.0
    input_grams = set(ngrams(input_tokens, n))
    novel = sum(1 for g in summary_grams if g not in input_grams)
    return 100.0 * novel / len(summary_grams)


# --------------------------------------------------------------------------
# Loading / saving
# --------------------------------------------------------------------------

def _read_jsonl(path: Path) -> Iterable[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusParseError(path, line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise CorpusParseError(path, line_no, "expected a JSON object")
            yield line_no, obj


def _require(obj: dict, key: str, path: Path, line_no: int) -> str:
    if key not in obj:
        raise CorpusParseError(path, line_no, f"missing key {key!r}")
    value = obj[key]
    if not isinstance(value, str):
        raise CorpusParseError(path, line_no, f"key {key!r} must be a string")
    return value


def load_corpus(path: str | Path) -> Corpus:
    """Load and validate a corpus directory holding qa_pairs.jsonl and summaries.jsonl."""
    root = Path(path)
    qa_path = root / QA_PAIRS_FILE
    sum_path = root / SUMMARIES_FILE
    if not qa_path.exists():
        raise CorpusError(f"missing {qa_path}")

    entities: list[Entity] = []
    entity_by_id: dict[str, Entity] = {}
    qa_pairs: list[QAPair] = []
    seen_qa_ids: set[str] = set()
    question_text_by_qid: dict[str, str] = {}

    for line_no, obj in _read_jsonl(qa_path):
        qa_id = _require(obj, "id", qa_path, line_no)
        entity_id = _require(obj, "entity_id", qa_path, line_no)
        entity_name = _require(obj, "entity_name", qa_path, line_no)
        category = _require(obj, "category", qa_path, line_no)
        question_id = _require(obj, "question_id", qa_path, line_no)
        question = _require(obj, "question", qa_path, line_no)
        answer = _require(obj, "answer", qa_path, line_no)
        is_seed = obj.get("is_seed")
        if is_seed is not None and not isinstance(is_seed, bool):
            raise CorpusParseError(qa_path, line_no, "is_seed must be a boolean")

        if not entity_id:
            raise CorpusParseError(qa_path, line_no, "entity_id must be non-empty")
        if not category:
            raise CorpusParseError(qa_path, line_no, "category must be non-empty")
        if not tokenize(question):
            raise CorpusParseError(qa_path, line_no, "question is empty after tokenization")
        if not tokenize(answer):
            raise CorpusParseError(qa_path, line_no, "answer is empty after tokenization")
        if qa_id in seen_qa_ids:
            raise DuplicateIdError(f"{qa_path}:{line_no}: duplicate QA pair id {qa_id!r}", qa_id)
        seen_qa_ids.add(qa_id)

        if entity_id in entity_by_id:
            known = entity_by_id[entity_id]
            if known.name != entity_name or known.category != category:
                raise CorpusParseError(
                    qa_path, line_no,
                    f"entity {entity_id!r} redefined with different name/category")
        else:
            entity = Entity(id=entity_id, name=entity_name, category=category)
            entity_by_id[entity_id] = entity
            entities.append(entity)

        if question_id in question_text_by_qid:
            if question_text_by_qid[question_id] != question:
                raise CorpusParseError(
                    qa_path, line_no,
                    f"question_id {question_id!r} carries conflicting question text")
        else:
            question_text_by_qid[question_id] = question

        qa_pairs.append(QAPair(id=qa_id, entity_id=entity_id, question_id=question_id,
                               question=question, answer=answer, is_seed=is_seed))

    summaries: list[SummaryRecord] = []
    seen_summary_entities: set[str] = set()
    if sum_path.exists():
        for line_no, obj in _read_jsonl(sum_path):
            entity_id = _require(obj, "entity_id", sum_path, line_no)
            reference = _require(obj, "reference_summary", sum_path, line_no)
            raw = obj.get("raw_summary")
            if raw is not None and not isinstance(raw, str):
                raise CorpusParseError(sum_path, line_no, "raw_summary must be a string")
            if not reference:
                raise CorpusParseError(sum_path, line_no, "reference_summary must be non-empty")
            if entity_id not in entity_by_id:
                raise IntegrityError(
                    f"{sum_path}:{line_no}: summary references unknown entity {entity_id!r}",
                    entity_id)
            if entity_id in seen_summary_entities:
                raise DuplicateIdError(
                    f"{sum_path}:{line_no}: second summary for entity {entity_id!r}", entity_id)
            seen_summary_entities.add(entity_id)
            summaries.append(SummaryRecord(entity_id=entity_id, reference_summary=reference,
                                           raw_summary=raw))

    # qa rows define entities, so the only possible dangling reference at this
    # point would come from a qa row itself; re-check for defence in depth.
    for qa in qa_pairs:
        if qa.entity_id not in entity_by_id:
            raise IntegrityError(
                f"QA pair {qa.id!r} references unknown entity {qa.entity_id!r}", qa.entity_id)

    return Corpus(entities=entities, qa_pairs=qa_pairs, summaries=summaries)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write qa_pairs.jsonl and summaries.jsonl; inverse of load_corpus."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    with open(root / QA_PAIRS_FILE, "w", encoding="utf-8") as fh:
        for qa in corpus.qa_pairs:
            entity = corpus.entity(qa.entity_id)
            row = {
                "id": qa.id,
                "entity_id": qa.entity_id,
                "entity_name": entity.name,
                "category": entity.category,
                "question_id": qa.question_id,
                "question": qa.question,
                "answer": qa.answer,
            }
            if qa.is_seed is not None:
                row["is_seed"] = qa.is_seed
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    with open(root / SUMMARIES_FILE, "w", encoding="utf-8") as fh:
        for rec in corpus.summaries:
            row: dict = {"entity_id": rec.entity_id}
            if rec.raw_summary is not None:
                row["raw_summary"] = rec.raw_summary
            row["reference_summary"] = rec.reference_summary
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


# --------------------------------------------------------------------------
# Splitting
# --------------------------------------------------------------------------

def split_corpus(corpus: Corpus, ratios: tuple[float, float, float], seed: int) -> CorpusSplit:
    """Shuffle entity ids (splitmix64 Fisher-Yates over the sorted ids) and cut
    floor(N*r_train) / floor(N*r_val) / remainder."""
    r_train, r_val, r_test = ratios
    if min(r_train, r_val, r_test) <= 0:
        raise ValueError("ratios must be positive")
    if abs(r_train + r_val + r_test - 1.0) > 1e-9:
        raise ValueError("ratios must sum to 1")
    ids = sorted(corpus.entity_ids())
    n = len(ids)
    if n == 0:
        raise ValueError("cannot split a corpus with 0 entities")
    rng = SplitMix64(seed)
    rng.shuffle(ids)
    n_train = math.floor(n * r_train)
    n_val = math.floor(n * r_val)
    return CorpusSplit(train=ids[:n_train],
                       val=ids[n_train:n_train + n_val],
                       test=ids[n_train + n_val:],
                       seed=seed)


# --------------------------------------------------------------------------
# Statistics
# --------------------------------------------------------------------------

def _entity_input_tokens(corpus: Corpus, entity_id: str) -> list[str]:
    toks: list[str] = []
    for qa in corpus.qas_for(entity_id):
        toks.extend(tokenize(qa.question))
        toks.extend(tokenize(qa.answer))
    return toks


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def _stats_for(corpus: Corpus, entity_ids: list[str]) -> CategoryStats:
    input_counts: list[float] = []
    raw_counts: list[float] = []
    ref_counts: list[float] = []
    novel: dict[int, list[float]] = {n: [] for n in (1, 2, 3, 4)}
    for eid in entity_ids:
        input_toks = _entity_input_tokens(corpus, eid)
        input_counts.append(float(len(input_toks)))
        rec = corpus.summary_for(eid)
        if rec is None:
            continue
        ref_toks = tokenize(rec.reference_summary)
        ref_counts.append(float(len(ref_toks)))
        if rec.raw_summary is not None:
            raw_counts.append(float(len(tokenize(rec.raw_summary))))
        for n in (1, 2, 3, 4):
            novel[n].append(novel_ngram_pct(ref_toks, input_toks, n))

    avg_input = _mean(input_counts) or 0.0
    avg_ref = _mean(ref_counts)
    novel_avg = {n: _mean(vals) for n, vals in novel.items()}
    has_novel = all(v is not None for v in novel_avg.values())
    compression = None
    if avg_ref is not None and avg_input > 0:
        compression = 100.0 * avg_ref / avg_input
    return CategoryStats(
        entity_count=len(entity_ids),
        avg_input_words=avg_input,
        avg_raw_summary_words=_mean(raw_counts),
        avg_ref_summary_words=avg_ref,
        novel_ngram_pct={n: v for n, v in novel_avg.items()} if has_novel else None,
        compression_ratio_pct=compression,
    )


def compute_stats(corpus: Corpus) -> CorpusStats:
    """Per-category and overall word-count / novel-n-gram / compression stats."""
    by_category: dict[str, list[str]] = defaultdict(list)
    for entity in corpus.entities:
        by_category[entity.category].append(entity.id)
    per_category = {cat: _stats_for(corpus, ids) for cat, ids in sorted(by_category.items())}
    overall = _stats_for(corpus, corpus.entity_ids())
    return CorpusStats(per_category=per_category, overall=overall)


def _fmt(value: float | None, digits: int = 1) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


def stats_to_dict(stats: CorpusStats) -> dict:
    def one(cs: CategoryStats) -> dict:
        return {
            "entity_count": cs.entity_count,
            "avg_input_words": cs.avg_input_words,
            "avg_raw_summary_words": cs.avg_raw_summary_words,
            "avg_ref_summary_words": cs.avg_ref_summary_words,
            "novel_ngram_pct": (
                {str(n): v for n, v in cs.novel_ngram_pct.items()}
                if cs.novel_ngram_pct is not None else None),
            "compression_ratio_pct": cs.compression_ratio_pct,
        }

    return {
        "format_version": FORMAT_VERSION,
        "per_category": {cat: one(cs) for cat, cs in stats.per_category.items()},
        "overall": one(stats.overall),
    }


def stats_markdown(stats: CorpusStats) -> str:
    """Markdown table: one row per category plus an All row."""
    header = ("| Category | Entities | Avg. input words | Avg. raw sum. words "
              "| Avg. ref sum. words | Novel 1-gram % | 2-gram % | 3-gram % | 4-gram % |")
    sep = "|---" * 9 + "|"
    lines = [header, sep]

    def row(label: str, cs: CategoryStats) -> str:
        novel = cs.novel_ngram_pct or {}
        cells = [
            label,
            str(cs.entity_count),
            _fmt(cs.avg_input_words),
            _fmt(cs.avg_raw_summary_words),
            _fmt(cs.avg_ref_summary_words),
            _fmt(novel.get(1), 2) if cs.novel_ngram_pct else "-",
            _fmt(novel.get(2), 2) if cs.novel_ngram_pct else "-",
            _fmt(novel.get(3), 2) if cs.novel_ngram_pct else "-",
            _fmt(novel.get(4), 2) if cs.novel_ngram_pct else "-",
        ]
        return "| " + " | ".join(cells) + " |"

    for cat, cs in stats.per_category.items():
        lines.append(row(cat, cs))
    lines.append(row("All", stats.overall))
    return "\n".join(lines) + "\n"
