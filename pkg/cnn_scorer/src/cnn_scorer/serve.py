"""scorer/1 server: one JSON request line in, one JSON reply line out.

Request: {"id": ..., "path": ...}. Reply: {"id": ..., "score": s} with s
clipped to [0, 10], or {"id": ..., "error": ...} if the image cannot be
read. Replies are emitted in request order; the loop runs until stdin
closes.
"""

import argparse
import json
import sys

from .model import load_artifact, load_image, predict


def serve(model, mean_image, config, stdin=None, stdout=None):
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        try:
            array = load_image(request["path"])
            score = min(10.0, max(0.0, predict(model, mean_image, config, array)))
            reply = {"id": request["id"], "score": score}
        except (OSError, ValueError) as exc:
            reply = {"id": request["id"], "error": f"unreadable image: {exc}"}
        stdout.write(json.dumps(reply) + "\n")
        stdout.flush()


def main(argv=None):
    parser = argparse.ArgumentParser(description="Serve a trained image scorer over scorer/1")
    parser.add_argument("--artifact", required=True, help="path to a trained model artifact")
    args = parser.parse_args(argv)
    model, mean_image, config = load_artifact(args.artifact)
    serve(model, mean_image, config)
    return 0


if __name__ == "__main__":
    sys.exit(main())
