"""Bridge-protocol stub predictor.

Reads one JSON request per stdin line, answers one JSON response per line.
Modes exercise the client's happy path and every failure path:

  empty              select nothing
  all                select every candidate
  echo --labels F    answer with the label stored for the order id in the
                     training JSONL file F (missing id -> empty selection)
  garbage            emit a non-JSON line
  wrong-id           well-formed response for a different order id
  unknown-column     select an id that is not among the candidates
  sleep --delay S    wait S seconds before a normal empty response
"""
import argparse
import json
import sys
import time


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument(
        "mode",
        choices=["empty", "all", "echo", "garbage", "wrong-id", "unknown-column", "sleep"],
    )
    parser.add_argument("--labels")
    parser.add_argument("--delay", type=float, default=0.0)
    args = parser.parse_args()

    labels = {}
    if args.labels:
        with open(args.labels, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    record = json.loads(line)
                    labels[record["order_id"]] = record["label"]

    for line in sys.stdin:
        if not line.strip():
            continue
        request = json.loads(line)
        order_id = request["order_id"]
        if args.mode == "sleep":
            time.sleep(args.delay)
            selected = []
        elif args.mode == "garbage":
            print("this is not json", flush=True)
            continue
        elif args.mode == "wrong-id":
            print(json.dumps({"order_id": order_id + "-nope", "selected": []}), flush=True)
            continue
        elif args.mode == "unknown-column":
            print(json.dumps({"order_id": order_id, "selected": ["no-such-column"]}), flush=True)
            continue
        elif args.mode == "empty":
            selected = []
        elif args.mode == "all":
            selected = [c["id"] for c in request["candidates"]]
        else:
            selected = labels.get(order_id, [])
        print(json.dumps({"order_id": order_id, "selected": selected}), flush=True)


if __name__ == "__main__":
    main()
