import json
import logging
import sqlite3
import uuid
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List

import aiosqlite

from .exceptions import IoFailure
from .models import Report


class RunHistory:
    """Ledger of verification runs in a local sqlite file"""

    def __init__(self, db_path: str):
        self.db_path = db_path
        self.logger = logging.getLogger(__name__)
        try:
            self._ensure_db_directory()
            self._init_database()
        except (OSError, sqlite3.Error) as e:
            raise IoFailure(f"Cannot open run history at {db_path}: {e}") from e

    def _ensure_db_directory(self) -> None:
        Path(self.db_path).parent.mkdir(parents=True, exist_ok=True)

    def _init_database(self) -> None:
        with sqlite3.connect(self.db_path) as conn:
            conn.execute("""
                CREATE TABLE IF NOT EXISTS runs (
                    run_id TEXT PRIMARY KEY,
                    timestamp TEXT NOT NULL,
                    model TEXT NOT NULL,
                    seed INTEGER NOT NULL,
                    kappa REAL NOT NULL,
                    suites TEXT NOT NULL,
                    passed INTEGER NOT NULL,
                    report TEXT NOT NULL
                )
            """)
            conn.commit()

    async def store_run(self, report: Report, suites: List[str]) -> str:
        """Store one run and return its id"""
        run_id = f"run_{datetime.now().strftime('%Y%m%d_%H%M%S')}_{uuid.uuid4().hex[:8]}"
        async with aiosqlite.connect(self.db_path) as db:
            await db.execute(
                """
                INSERT INTO runs (run_id, timestamp, model, seed, kappa, suites, passed, report)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?)
                """,
                (
                    run_id,
                    datetime.now().isoformat(),
                    report.model,
                    report.seed,
                    report.kappa,
                    json.dumps(suites),
                    int(report.passed),
                    report.to_json(),
                ),
            )
            await db.commit()

        self.logger.info(f"Stored run {run_id}")
        return run_id

    async def get_run(self, run_id: str) -> Dict[str, Any]:
        async with aiosqlite.connect(self.db_path) as db:
            async with db.execute("SELECT * FROM runs WHERE run_id = ?", (run_id,)) as cursor:
                row = await cursor.fetchone()
        if not row:
            raise ValueError(f"Run {run_id} not found")
        entry = self._row_to_dict(row)
        entry["report"] = json.loads(row[7])
        return entry

    async def get_recent_runs(self, limit: int = 10) -> List[Dict[str, Any]]:
        async with aiosqlite.connect(self.db_path) as db:
            async with db.execute("SELECT * FROM runs ORDER BY timestamp DESC LIMIT ?", (limit,)) as cursor:
                rows = await cursor.fetchall()
        return [self._row_to_dict(row) for row in rows]

    @staticmethod
    def _row_to_dict(row) -> Dict[str, Any]:
        return {
            "run_id": row[0],
            "timestamp": row[1],
            "model": row[2],
            "seed": row[3],
            "kappa": row[4],
            "suites": json.loads(row[5]),
            "pass": bool(row[6]),
        }
