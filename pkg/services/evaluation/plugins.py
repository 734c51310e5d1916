# services/evaluation/plugins.py

import logging
import subprocess
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Dict, List, Sequence, Union

from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_exponential

from services.errors import MetricPluginError

logger = logging.getLogger(__name__)


class BaseMetricPlugin(ABC):
    """External quality metric (WER, speaker similarity, MOS proxy) over a synthesized WAV."""

    name: str

    @abstractmethod
    def score(self, wav_path: Union[str, Path], reference: str) -> float:
        pass


class CommandMetricPlugin(BaseMetricPlugin):
    """
    Runs an external command and reads a float from the last line of stdout.

    `command` is an argument list; "{wav}" and "{reference}" placeholders are
    substituted per call.
    """

    def __init__(self, name: str, command: Sequence[str], timeout: float = 120.0):
        if not command:
            raise MetricPluginError(f"Metric plugin {name} has an empty command")
        self.name = name
        self.command = list(command)
        self.timeout = timeout

    @retry(
        stop=stop_after_attempt(3),
        wait=wait_exponential(multiplier=1, min=1, max=10),
        retry=retry_if_exception_type(subprocess.TimeoutExpired),
        reraise=True,
    )
    def _run(self, args: List[str]) -> str:
        completed = subprocess.run(
            args, capture_output=True, text=True, timeout=self.timeout, check=False
        )
        if completed.returncode != 0:
            raise MetricPluginError(
                f"Metric command {self.name} exited with {completed.returncode}",
                {"stderr": completed.stderr[-500:]},
            )
        return completed.stdout

    def score(self, wav_path: Union[str, Path], reference: str) -> float:
        args = [part.format(wav=str(wav_path), reference=reference) for part in self.command]
        try:
            stdout = self._run(args)
        except subprocess.TimeoutExpired:
            raise MetricPluginError(f"Metric command {self.name} timed out", {"timeout": self.timeout})
        except OSError as e:
            raise MetricPluginError(f"Metric command {self.name} could not start: {e}")
        lines = [line.strip() for line in stdout.splitlines() if line.strip()]
        try:
            return float(lines[-1])
        except (IndexError, ValueError):
            raise MetricPluginError(
                f"Metric command {self.name} did not print a number", {"stdout": stdout[-200:]}
            )


def score_with_plugins(
    plugins: Sequence[BaseMetricPlugin], wav_path: Union[str, Path], reference: str
) -> Dict[str, float]:
    scores = {}
    for plugin in plugins:
        scores[plugin.name] = plugin.score(wav_path, reference)
        logger.info(f"{plugin.name}: {scores[plugin.name]:.4f}")
    return scores
