"""
Flask application factory for apfree.
"""
import logging
import os
from flask import Flask


def create_app(config_name='default'):
    """Create and configure the application hosting the command surface."""
    # Import these inside the function to avoid import-time side effects
    from apfree_app.config import config
    from apfree_app.models import db

    app = Flask(__name__)
    app.config.from_object(config[config_name])

    # DATABASE_URL is read at runtime, after .env has been loaded
    database_url = os.environ.get('DATABASE_URL')
    if database_url and not app.config.get('TESTING'):
        app.config['SQLALCHEMY_DATABASE_URI'] = database_url

    logging.basicConfig(
        level=getattr(logging, str(app.config['LOG_LEVEL']).upper(), logging.WARNING),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )

    uri = app.config['SQLALCHEMY_DATABASE_URI']
    if uri.startswith('sqlite:///') and ':memory:' not in uri:
        os.makedirs(os.path.dirname(uri[len('sqlite:///'):]) or '.', exist_ok=True)

    db.init_app(app)
    with app.app_context():
        db.create_all()

    # Register blueprints
    from apfree_app.commands import sets_cli, embeddings_cli, increment_cli, verify_cli, history_cli

    app.register_blueprint(sets_cli.bp)
    app.register_blueprint(embeddings_cli.bp)
    app.register_blueprint(increment_cli.bp)
    app.register_blueprint(increment_cli.replay_bp)
    app.register_blueprint(verify_cli.bp)
    app.register_blueprint(history_cli.bp)

    return app
