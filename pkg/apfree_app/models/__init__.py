"""
Database models for apfree.
"""
from apfree_app.models.base import db, generate_uuid, to_json
from apfree_app.models.run import RunRecord

__all__ = [
    'db',
    'generate_uuid',
    'to_json',
    'RunRecord',
]
