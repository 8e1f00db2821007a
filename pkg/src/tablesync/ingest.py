"""Parse saved infobox HTML into the corpus JSON schema.

Deliberately small: the input is a locally saved page fragment holding one
infobox table.  Images, hyperlinks (text kept), and reference/signature
superscripts are stripped.  Entity, language, and category come from the
filename, ``<entity>__<lang>__<category>.html``, since saved fragments carry
no reliable metadata.
"""

from __future__ import annotations

import datetime as _dt
from html.parser import HTMLParser
from pathlib import Path

from .corpus import Infobox, Row
from .errors import ValidationError


class _InfoboxParser(HTMLParser):
    """Collects (key, values) cell pairs from the first infobox-like table."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.rows: list[tuple[str, list[str]]] = []
        self._table_depth = 0
        self._in_infobox = False
        self._cell: str | None = None  # "key" | "value"
        self._chunks: list[str] = []
        self._current_key: str | None = None
        self._current_values: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        attrs = dict(attrs)
        if tag == "table":
            self._table_depth += 1
            if self._table_depth == 1 and "infobox" in attrs.get("class", ""):
                self._in_infobox = True
            return
        if not self._in_infobox or self._table_depth != 1:
            return
        if tag in ("img", "sup"):
            # images and reference superscripts never contribute text
            if tag == "sup":
                self._skip_depth += 1
            return
        if tag == "tr":
            self._flush_row()
        elif tag == "th":
            self._cell = "key"
            self._chunks = []
        elif tag == "td":
            self._cell = "value"
            self._chunks = []
        elif tag in ("br", "li") and self._cell == "value":
            self._chunks.append("\x00")  # value separator

    def handle_endtag(self, tag):
        if tag == "table":
            if self._table_depth == 1 and self._in_infobox:
                self._flush_row()
                self._in_infobox = False
            self._table_depth -= 1
            return
        if not self._in_infobox:
            return
        if tag == "sup" and self._skip_depth:
            self._skip_depth -= 1
        elif tag == "th" and self._cell == "key":
            text = self._text()
            if text:
                self._current_key = text
            self._cell = None
        elif tag == "td" and self._cell == "value":
            values = [v.strip() for v in self._text().split("\x00")]
            self._current_values = [v for v in values if v]
            self._cell = None

    def handle_data(self, data):
        if self._in_infobox and self._cell and not self._skip_depth:
            self._chunks.append(data)

    def _text(self) -> str:
        parts = "".join(self._chunks).split("\x00")
        return "\x00".join(" ".join(p.split()) for p in parts).strip("\x00 ")

    def _flush_row(self):
        if self._current_key and self._current_values:
            self.rows.append((self._current_key, self._current_values))
        self._current_key = None
        self._current_values = []


def parse_infobox_html(path: str | Path,
                       extracted_at: _dt.date | None = None) -> Infobox:
    """Parse one saved HTML file named ``<entity>__<lang>__<category>.html``."""
    path = Path(path)
    parts = path.stem.split("__")
    if len(parts) != 3:
        raise ValidationError(
            f"{path.name}: expected <entity>__<lang>__<category>.html"
        )
    entity_id, language, category = parts
    parser = _InfoboxParser()
    parser.feed(path.read_text(encoding="utf-8"))
    parser._flush_row()
    if not parser.rows:
        raise ValidationError(f"{path.name}: no infobox rows found")
    rows = tuple(Row(key=key, values=tuple(values)) for key, values in parser.rows)
    return Infobox(
        entity_id=entity_id,
        language=language,
        category=category,
        rows=rows,
        extracted_at=extracted_at or _dt.date.today(),
    )
