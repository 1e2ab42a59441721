"""One JSON config document for judge, scorer, and server settings."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .clients import JudgeConfig


class ConfigError(ValueError):
    """Raised for unreadable or malformed config files."""


@dataclass(frozen=True)
class ScorerConfig:
    scorer_id: str = "alignscore"
    endpoint: str = ""


@dataclass(frozen=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    transcripts: str = ""
    notes: str = ""
    rubric: str = "default"
    log: str = "judgments.log"
    blind_source: bool = False
    ui_dir: str | None = None
    annotators: tuple[str, ...] = ()
    dimensions: tuple[str, ...] = ("completeness", "conciseness",
                                   "faithfulness", "likert_baseline")
    auto_judgments: tuple[str, ...] = ()


@dataclass(frozen=True)
class AppConfig:
    judge: JudgeConfig | None = None
    scorer: ScorerConfig | None = None
    server: ServerConfig | None = None
    base_dir: Path = field(default_factory=Path)

    def resolve(self, path: str | None) -> str | None:
        """Paths in the config file are relative to the file itself."""
        if not path:
            return path
        p = Path(path)
        return str(p if p.is_absolute() else self.base_dir / p)


def load_config(path: str | Path) -> AppConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None

    judge = None
    if "judge" in doc:
        j = doc["judge"]
        try:
            judge = JudgeConfig(
                model_id=j["model_id"],
                endpoint=j.get("endpoint", ""),
                temperature=float(j.get("temperature", 0.0)),
                max_in_flight=int(j.get("max_in_flight", 4)),
                max_retries=int(j.get("max_retries", 2)),
                cache_dir=j.get("cache_dir"),
            )
        except KeyError as exc:
            raise ConfigError(f"{path}: judge config missing "
                              f"{exc.args[0]!r}") from None

    scorer = None
    if "scorer" in doc:
        s = doc["scorer"]
        scorer = ScorerConfig(scorer_id=s.get("scorer_id", "alignscore"),
                              endpoint=s.get("endpoint", ""))

    server = None
    if "server" in doc:
        s = doc["server"]
        server = ServerConfig(
            host=s.get("host", "127.0.0.1"),
            port=int(s.get("port", 8000)),
            transcripts=s.get("transcripts", ""),
            notes=s.get("notes", ""),
            rubric=s.get("rubric", "default"),
            log=s.get("log", "judgments.log"),
            blind_source=bool(s.get("blind_source", False)),
            ui_dir=s.get("ui_dir"),
            annotators=tuple(s.get("annotators", ())),
            dimensions=tuple(s.get("dimensions", ServerConfig.dimensions)),
            auto_judgments=tuple(s.get("auto_judgments", ())),
        )

    return AppConfig(judge=judge, scorer=scorer, server=server,
                     base_dir=path.resolve().parent)
