#!/usr/bin/env python3
"""
TSV formats: qrels, ranked results, token annotations and vocabularies
"""

from pathlib import Path
from typing import Dict, Iterator, List, Set, Tuple, Union

from utils.errors import IoFailure, MalformedLine
from utils.logger import logger

PathLike = Union[str, Path]

# query_id -> relevant passage ids
Qrels = Dict[int, Set[int]]
# query_id -> [(passage_id, score), ...] best first
RankedResults = Dict[int, List[Tuple[int, float]]]


def _rows(path: PathLike, n_fields: int) -> Iterator[Tuple[int, List[str]]]:
    """Yield (line_no, fields) for every data line, skipping blanks and '#' comments"""
    try:
        with open(path, "rb") as f:
            for line_no, raw in enumerate(f, start=1):
                try:
                    line = raw.decode("utf-8").rstrip("\r\n")
                except UnicodeDecodeError as e:
                    raise MalformedLine(line_no, f"invalid UTF-8 at byte {e.start}") from None
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                fields = line.split("\t")
                if len(fields) != n_fields:
                    raise MalformedLine(line_no, f"expected {n_fields} tab-separated fields, got {len(fields)}")
                yield line_no, fields
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e


def _non_negative_int(value: str, line_no: int, what: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise MalformedLine(line_no, f"{what} {value!r} is not an integer") from None
    if number < 0:
        raise MalformedLine(line_no, f"{what} {number} is negative")
    return number


def read_qrels(path: PathLike) -> Qrels:
    """Read `query_id<TAB>passage_id` pairs; duplicate pairs collapse"""
    qrels: Qrels = {}
    for line_no, (qid, pid) in _rows(path, 2):
        query_id = _non_negative_int(qid, line_no, "query_id")
        passage_id = _non_negative_int(pid, line_no, "passage_id")
        qrels.setdefault(query_id, set()).add(passage_id)
    logger.debug(f"Read qrels for {len(qrels)} queries from {path}")
    return qrels


def write_qrels(qrels: Qrels, path: PathLike):
    try:
        with open(path, "w", encoding="utf-8") as f:
            for qid in sorted(qrels):
                for pid in sorted(qrels[qid]):
                    f.write(f"{qid}\t{pid}\n")
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def write_results(results: RankedResults, path: PathLike):
    """Write `query_id<TAB>rank<TAB>passage_id<TAB>score`, rank from 1, score to 6 decimals"""
    try:
        with open(path, "w", encoding="utf-8") as f:
            for qid, hits in results.items():
                for rank, (pid, score) in enumerate(hits, start=1):
                    f.write(f"{qid}\t{rank}\t{pid}\t{score:.6f}\n")
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e
    logger.debug(f"Wrote results for {len(results)} queries to {path}")


def read_results(path: PathLike) -> RankedResults:
    """Read a results file back; hits are ordered by their rank column"""
    ranked: Dict[int, List[Tuple[int, int, float]]] = {}
    for line_no, (qid, rank, pid, score) in _rows(path, 4):
        query_id = _non_negative_int(qid, line_no, "query_id")
        position = _non_negative_int(rank, line_no, "rank")
        if position < 1:
            raise MalformedLine(line_no, "rank starts at 1")
        passage_id = _non_negative_int(pid, line_no, "passage_id")
        try:
            value = float(score)
        except ValueError:
            raise MalformedLine(line_no, f"score {score!r} is not a number") from None
        ranked.setdefault(query_id, []).append((position, passage_id, value))
    return {qid: [(pid, score) for _, pid, score in sorted(rows)] for qid, rows in ranked.items()}


def read_tokens(path: PathLike) -> Dict[int, int]:
    """Read the `embedding_offset<TAB>token_id` sidecar"""
    tokens: Dict[int, int] = {}
    for line_no, (offset, token) in _rows(path, 2):
        tokens[_non_negative_int(offset, line_no, "embedding_offset")] = _non_negative_int(token, line_no, "token_id")
    return tokens


def write_tokens(token_ids, path: PathLike):
    try:
        with open(path, "w", encoding="utf-8") as f:
            for offset, token in enumerate(token_ids):
                f.write(f"{offset}\t{int(token)}\n")
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def read_vocab(path: PathLike) -> Dict[int, str]:
    """Read the optional `token_id<TAB>string` vocabulary"""
    vocab: Dict[int, str] = {}
    for line_no, (token, text) in _rows(path, 2):
        vocab[_non_negative_int(token, line_no, "token_id")] = text
    return vocab
