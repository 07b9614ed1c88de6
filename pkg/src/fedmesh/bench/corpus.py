"""Query corpus loading."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

from ..sparql.ast import Query
from ..sparql.parser import parse_query

CORPUS_DIR = Path(__file__).resolve().parent.parent / "corpus"


@dataclass(frozen=True)
class CorpusQuery:
    id: str
    text: str
    query: Query
    path: str = ""
    title: str = ""


def _read(path: Path, qid: str, title: str = "") -> CorpusQuery:
    text = path.read_text(encoding="utf-8")
    return CorpusQuery(qid, text, parse_query(text), str(path), title)


def load_corpus(paths: Union[str, Path, Iterable[Union[str, Path]], None] = None) -> list[CorpusQuery]:
    """Queries from ``.rq`` files and directories, the bundled corpus by default.

    A directory with a ``manifest.json`` is read in manifest order, otherwise
    its ``*.rq`` files are taken in name order.  Parse errors propagate.
    """
    if paths is None:
        paths = [CORPUS_DIR]
    elif isinstance(paths, (str, Path)):
        paths = [paths]
    out: list[CorpusQuery] = []
    for p in map(Path, paths):
        if p.is_dir():
            manifest = p / "manifest.json"
            if manifest.exists():
                doc = json.loads(manifest.read_text(encoding="utf-8"))
                for e in doc["queries"]:
                    out.append(_read(p / e["file"], e["id"], e.get("title", "")))
            else:
                out.extend(_read(f, f.stem) for f in sorted(p.glob("*.rq")))
        else:
            out.append(_read(p, p.stem))
    ids = [q.id for q in out]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate query ids in corpus")
    return out
