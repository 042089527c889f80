import json
import os

from bcd.service import create_app

DOC = os.path.join(os.path.dirname(__file__), "..", "docs", "openapi.json")


def test_shipped_openapi_matches_app(tmp_path):
    # regenerate with: python -c "see README, 'API documentation'"
    app = create_app(data_dir=str(tmp_path))
    live = json.loads(json.dumps(app.openapi(), sort_keys=True))
    shipped = json.load(open(DOC))
    assert shipped == live
