import json
import logging
import os
from typing import Any, Dict, List


class RunLogger:
    """
    Per-run log file plus JSON artifacts under `out_dir`.

    JSON artifacts carry no timestamps, so two seeded runs write identical files.
    """

    def __init__(self, out_dir: str, run_name: str, level: int = logging.INFO):
        self.run_dir = out_dir
        os.makedirs(self.run_dir, exist_ok=True)
        self.run_name = run_name
        self.logger = logging.getLogger(f"run.{run_name}")

        # Handlers sit on the root logger so every module logger reaches the run log
        root = logging.getLogger()
        if root.level > level:
            root.setLevel(level)
        log_file = os.path.abspath(os.path.join(self.run_dir, f"{run_name}.log"))
        formatter = logging.Formatter("%(asctime)s - %(levelname)s - %(message)s")
        # Check if handlers already exist to avoid duplicate logging
        self.file_handler = next(
            (h for h in root.handlers if getattr(h, "baseFilename", None) == log_file), None
        )
        if self.file_handler is None:
            self.file_handler = logging.FileHandler(log_file, encoding="utf-8")
            self.file_handler.setLevel(level)
            self.file_handler.setFormatter(formatter)
            root.addHandler(self.file_handler)
        if not any(type(h) is logging.StreamHandler for h in root.handlers):
            console_handler = logging.StreamHandler()
            console_handler.setLevel(level)
            console_handler.setFormatter(formatter)
            root.addHandler(console_handler)

        self.run_data: Dict[str, Any] = {"run_name": run_name, "epochs": []}

    def log_config(self, config: Dict[str, Any], config_hash: str):
        self.run_data["config"] = config
        self.run_data["config_hash"] = config_hash
        self.logger.info(f"Resolved config {config_hash}")
        self._save_json("config.json", {"config_hash": config_hash, "config": config})

    def log_epoch(self, epoch: int, loss: float):
        self.run_data["epochs"].append({"epoch": epoch, "loss": loss})

    def save_loss_curve(self, filename: str, losses: List[float], config_hash: str, step: int):
        for epoch, loss in enumerate(losses, start=1):
            self.log_epoch(epoch, loss)
        rows = [{"epoch": i + 1, "loss": loss} for i, loss in enumerate(losses)]
        self._save_json(filename, {"config_hash": config_hash, "step": step, "losses": rows})
        self.logger.info(f"Saved {len(rows)}-epoch loss curve to {filename}")

    def log_stats(self, stats: Dict[str, Any], filename: str = "stats.json"):
        self.run_data["stats"] = stats
        self.logger.info(f"Stats: {stats}")
        self._save_json(filename, stats)

    def save_json(self, filename: str, data: Any) -> str:
        return self._save_json(filename, data)

    def _save_json(self, filename: str, data: Any) -> str:
        filepath = os.path.join(self.run_dir, filename)
        with open(filepath, "w", encoding="utf-8") as f:
            json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)
        return filepath

    def close(self):
        root = logging.getLogger()
        if self.file_handler in root.handlers:
            root.removeHandler(self.file_handler)
            self.file_handler.close()

    def __enter__(self) -> "RunLogger":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc is not None:
            self.logger.error(f"Run {self.run_name} failed: {type(exc).__name__}: {exc}")
        self.close()
