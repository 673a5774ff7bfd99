from datetime import datetime, timezone
from typing import Any

from pydantic import BaseModel


class ProgressEvent(BaseModel):
    event: str
    data: dict[str, Any]


class ReplicationCompletedEvent(ProgressEvent):
    event: str = "replication_completed"

    @classmethod
    def create(cls, cell_id: str, rep: int, failed: int) -> "ReplicationCompletedEvent":
        return cls(
            data={
                "cell": cell_id,
                "rep": rep,
                "failed": failed,
                "timestamp": datetime.now(timezone.utc).isoformat(),
            }
        )


class CellCompletedEvent(ProgressEvent):
    event: str = "cell_completed"

    @classmethod
    def create(cls, cell_id: str, rows: int, failed: int) -> "CellCompletedEvent":
        return cls(
            data={
                "cell": cell_id,
                "rows": rows,
                "failed": failed,
                "timestamp": datetime.now(timezone.utc).isoformat(),
            }
        )


class ExperimentCompletedEvent(ProgressEvent):
    event: str = "experiment_completed"

    @classmethod
    def create(cls, cells: int, rows: int) -> "ExperimentCompletedEvent":
        return cls(
            data={
                "cells": cells,
                "rows": rows,
                "timestamp": datetime.now(timezone.utc).isoformat(),
            }
        )
