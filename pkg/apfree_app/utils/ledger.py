"""
Run ledger: one RunRecord per command invocation.
"""
import logging

from apfree_app.models import db, RunRecord, to_json

logger = logging.getLogger(__name__)


def record_run(command, arguments, summary, exit_code, duration, seed=None):
    """Store a run; failures are logged and never reach the command."""
    try:
        record = RunRecord(
            command=command,
            seed=seed,
            arguments=to_json(arguments) if arguments else None,
            summary=to_json(summary) if summary else None,
            exit_code=exit_code,
            duration=duration,
        )
        db.session.add(record)
        db.session.commit()
        return record
    except Exception as e:
        logger.error(f"Run ledger error: {e}")
        try:
            db.session.rollback()
        except Exception:
            pass
        return None


def recent_runs(limit=20, command=None):
    query = RunRecord.query
    if command:
        query = query.filter_by(command=command)
    return query.order_by(RunRecord.created_at.desc()).limit(limit).all()
