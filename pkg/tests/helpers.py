from pathlib import Path

from indexprop.analysis import analyze
from indexprop.frontend import parse, parse_file

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
DATA = Path(__file__).resolve().parent / "data"
CORPUS_FILES = sorted(CORPUS.glob("*.knl"))


def load(name: str):
    path = CORPUS / name if (CORPUS / name).exists() else DATA / name
    return parse_file(path)


def analyze_src(src: str):
    return analyze(parse(src))
