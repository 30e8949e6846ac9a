"""
RunRecord model: one row per command invocation.
"""
import json
from datetime import datetime
from sqlalchemy import Index
from apfree_app.models.base import db, generate_uuid


class RunRecord(db.Model):
    """Ledger of command runs, enough to reproduce each one."""
    __tablename__ = 'runs'

    id = db.Column(db.String(36), primary_key=True, default=generate_uuid)
    command = db.Column(db.String(50), nullable=False)
    seed = db.Column(db.Integer)

    arguments = db.Column(db.Text)  # JSON
    summary = db.Column(db.Text)  # JSON
    exit_code = db.Column(db.Integer, nullable=False, default=0)
    duration = db.Column(db.Float)

    created_at = db.Column(db.DateTime, default=datetime.utcnow, index=True)

    __table_args__ = (
        Index('idx_runs_command_created', 'command', 'created_at'),
    )

    def to_dict(self):
        return {
            'id': self.id,
            'command': self.command,
            'seed': self.seed,
            'arguments': json.loads(self.arguments) if self.arguments else None,
            'summary': json.loads(self.summary) if self.summary else None,
            'exit_code': self.exit_code,
            'duration': self.duration,
            'created_at': self.created_at.isoformat() if self.created_at else None,
        }
