"""Generate a small labeled screening dataset for the UI end-to-end test."""
import random
import sys

N_DOCS = 300
PREVALENCE = 0.10
TOPICS = 6
TOPIC_WORDS = 25
COMMON_WORDS = 60


def main(path: str, seed: int = 7) -> None:
    rng = random.Random(seed)
    n_rel = round(N_DOCS * PREVALENCE)
    topics = [0] * n_rel + [rng.randrange(1, TOPICS) for _ in range(N_DOCS - n_rel)]
    rng.shuffle(topics)
    lines = ["id,title,abstract,label"]
    for i, topic in enumerate(topics):
        words = []
        for _ in range(rng.randint(15, 39)):
            if rng.random() < 0.55:
                words.append(f"topic{topic}word{rng.randrange(TOPIC_WORDS)}")
            else:
                words.append(f"common{rng.randrange(COMMON_WORDS)}")
        title = " ".join(words[:3])
        abstract = " ".join(words[3:])
        label = "yes" if topic == 0 else "no"
        lines.append(f"doc{i:05d},{title},{abstract},{label}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1], int(sys.argv[2]) if len(sys.argv) > 2 else 7)
