"""Prompt templates, one per route plus routing, augmentation and fusion.

Templates are plain text files named prompt_<name>.txt. A deployment can
override any of them from a config directory; missing files fall back to the
packaged defaults. Placeholders are {lower_snake} tokens substituted in a
single pass over the template, so values containing brace tokens are
inserted literally and never re-expanded.
"""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path
from typing import Optional

from .errors import ConfigError

TEMPLATE_NAMES = ("routing", "question", "ado", "rpg", "general", "fusion", "augment")

_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")


def render(template: str, params: dict[str, str]) -> str:
    """Substitute each placeholder exactly once; unknown placeholders stay put."""
    return _PLACEHOLDER_RE.sub(lambda m: params.get(m.group(1), m.group(0)), template)


class PromptLibrary:
    def __init__(self, templates: dict[str, str]):
        missing = [n for n in TEMPLATE_NAMES if n not in templates]
        if missing:
            raise ConfigError(f"prompt library is missing templates: {missing}")
        self._templates = dict(templates)

    @classmethod
    def load(cls, prompt_dir: Optional[Path] = None) -> "PromptLibrary":
        if prompt_dir is not None and not Path(prompt_dir).is_dir():
            raise ConfigError(f"prompt directory does not exist: {prompt_dir}")
        templates = {}
        for name in TEMPLATE_NAMES:
            filename = f"prompt_{name}.txt"
            override = Path(prompt_dir) / filename if prompt_dir is not None else None
            if override is not None and override.is_file():
                templates[name] = override.read_text(encoding="utf-8")
            else:
                templates[name] = (
                    resources.files("ragdesk").joinpath("templates", filename).read_text(encoding="utf-8")
                )
        return cls(templates)

    def render(self, name: str, **params: str) -> str:
        return render(self._templates[name], params)
