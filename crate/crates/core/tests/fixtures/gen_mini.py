#!/usr/bin/env python3
"""Regenerates tests/fixtures/mini: a small labeled developer corpus.

Each role draws repository, issue and import vocabulary mostly from its own
pool with some shared filler, so the classes are separable but not trivially.
Output is deterministic for a given seed.
"""

import hashlib
import json
import random
import sys
from pathlib import Path

SEED = 20240611
PER_ROLE = 20

ROLES = {
    "Backend": {
        "words": "server endpoint database postgres query schema migration rest grpc microservice "
        "authentication session cache redis queue transaction orm latency throughput handler "
        "middleware routing spring django flask express jvm".split(),
        "imports": {
            ".java": ["org.springframework.boot.SpringApplication", "org.hibernate.Session",
                      "javax.persistence.Entity", "com.fasterxml.jackson.databind.ObjectMapper"],
            ".go": ["net/http", "database/sql", "github.com/gin-gonic/gin", "google.golang.org/grpc"],
            ".py": ["flask", "sqlalchemy", "django.db", "celery", "redis"],
        },
    },
    "Frontend": {
        "words": "react component css html layout responsive browser dom webpack bundle redux "
        "state hooks props styling animation typescript vue angular accessibility render "
        "button modal form navbar theme".split(),
        "imports": {
            ".js": ["react", "react-dom", "redux", "axios", "lodash", "styled-components"],
            ".ts": ["@angular/core", "rxjs", "vue", "react-router-dom"],
        },
    },
    "Mobile": {
        "words": "android ios app swift kotlin flutter device screen gesture activity fragment "
        "viewcontroller gradle xcode emulator notification offline sync tablet camera "
        "permission playstore appstore widget touch".split(),
        "imports": {
            ".kt": ["android.os.Bundle", "androidx.appcompat.app.AppCompatActivity",
                    "androidx.recyclerview.widget.RecyclerView", "kotlinx.coroutines.launch"],
            ".dart": ["package:flutter/material.dart", "package:provider/provider.dart",
                      "package:http/http.dart"],
            ".java": ["android.app.Activity", "android.widget.TextView"],
        },
    },
    "DevOps": {
        "words": "docker kubernetes helm terraform ansible pipeline deployment cluster container "
        "monitoring prometheus grafana nginx jenkins provisioning infrastructure cloud aws "
        "scaling logging alerting ingress node rollout".split(),
        "imports": {
            ".go": ["k8s.io/client-go/kubernetes", "github.com/docker/docker/client",
                    "github.com/prometheus/client_golang/prometheus"],
            ".py": ["boto3", "yaml", "paramiko", "kubernetes"],
            ".rb": ["chef", "aws-sdk", "net/ssh"],
        },
    },
    "DataScientist": {
        "words": "dataset model training regression classification feature notebook pandas "
        "numpy statistics visualization clustering neural tensor accuracy prediction "
        "experiment sampling hyperparameter inference matrix analysis plot".split(),
        "imports": {
            ".py": ["pandas", "numpy", "sklearn.model_selection", "matplotlib.pyplot", "torch", "scipy.stats"],
            ".r": ["ggplot2", "dplyr", "caret", "tidyr"],
            ".ipynb": ["pandas", "numpy", "seaborn", "sklearn.linear_model"],
        },
    },
}

FILLER = ("project code update version release feature bug fix support documentation test build "
          "issue change add remove improve config file error performance example").split()
SHARED_IMPORTS = {".py": ["os", "json", "logging"], ".js": ["path", "fs"], ".go": ["fmt", "os"],
                  ".java": ["java.util.List"], ".ts": ["path"], ".kt": ["kotlin.math.max"],
                  ".dart": ["dart:async"], ".rb": ["json"], ".r": ["stats"], ".ipynb": ["os"]}


def sha(*parts):
    return hashlib.sha1("/".join(parts).encode()).hexdigest()


def sentence(rng, words, n, noise):
    return " ".join(rng.choice(FILLER) if rng.random() < noise else rng.choice(words) for _ in range(n))


def source_file(ext, names):
    if ext in (".py",):
        return "".join(f"import {n}\n" for n in names) + "\n\ndef main():\n    pass\n"
    if ext in (".js", ".ts"):
        return "".join(f"import x{i} from '{n}';\n" for i, n in enumerate(names)) + "\nexport default {};\n"
    if ext == ".go":
        return "package main\n\nimport (\n" + "".join(f'\t"{n}"\n' for n in names) + ")\n\nfunc main() {}\n"
    if ext in (".java",):
        return "".join(f"import {n};\n" for n in names) + "\npublic class Main {}\n"
    if ext == ".kt":
        return "".join(f"import {n}\n" for n in names) + "\nfun main() {}\n"
    if ext == ".dart":
        return "".join(f"import '{n}';\n" for n in names) + "\nvoid main() {}\n"
    if ext == ".rb":
        return "".join(f"require '{n}'\n" for n in names) + "\nputs 'ok'\n"
    if ext == ".r":
        return "".join(f"library({n})\n" for n in names) + "\nsummary(cars)\n"
    if ext == ".ipynb":
        cell = {"cell_type": "code", "metadata": {}, "outputs": [], "execution_count": None,
                "source": [f"import {n}\n" for n in names]}
        return json.dumps({"cells": [cell], "metadata": {}, "nbformat": 4, "nbformat_minor": 5})
    raise ValueError(ext)


def generate(out: Path, seed: int = SEED):
    rng = random.Random(seed)
    developers, repos, issues, commits = [], [], [], []
    for role, pool in ROLES.items():
        for i in range(PER_ROLE):
            dev = f"{role.lower()}-dev{i:02d}"
            developers.append({"developer_id": dev, "role": role})
            noise = rng.uniform(0.3, 0.6)
            for r in range(rng.randint(2, 4)):
                name = f"{rng.choice(pool['words'])}-{rng.choice(FILLER)}-{r}"
                forked = None if rng.random() > 0.1 else f"upstream{r}/{name}"
                repos.append({
                    "developer_id": dev,
                    "repo_full_name": f"{dev}/{name}",
                    "name": name,
                    "tags": rng.sample(pool["words"], 3),
                    "topic": sentence(rng, pool["words"], 6, noise),
                    "readme": sentence(rng, pool["words"], rng.randint(30, 60), noise),
                    "forked_from": forked,
                })
            for k in range(rng.randint(3, 6)):
                issues.append({
                    "developer_id": dev,
                    "issue_id": f"{dev}/tracker#{k + 1}",
                    "title": sentence(rng, pool["words"], 6, noise),
                    "body": sentence(rng, pool["words"], rng.randint(20, 40), noise),
                    "relation": rng.choice(["assigned", "created", "participated"]),
                })
            exts = sorted(pool["imports"])
            for c in range(rng.randint(2, 4)):
                files = []
                for f in range(rng.randint(1, 3)):
                    ext = rng.choice(exts)
                    names = rng.sample(pool["imports"][ext], rng.randint(2, len(pool["imports"][ext])))
                    names += rng.sample(SHARED_IMPORTS[ext], 1)
                    files.append({"path": f"src/mod{c}_{f}{ext}", "content": source_file(ext, names)})
                commits.append({"developer_id": dev, "commit_sha": sha(dev, str(c)), "files": files})
    # One unlabeled developer with evidence and one listed developer with none.
    developers.append({"developer_id": "unlabeled-dev", "role": None})
    repos.append({"developer_id": "unlabeled-dev", "repo_full_name": "unlabeled-dev/tools", "name": "tools",
                  "tags": ["docker", "react"], "topic": "misc tools", "readme": sentence(rng, FILLER, 30, 0.0),
                  "forked_from": None})
    developers.append({"developer_id": "ghost-dev", "role": "Backend"})

    out.mkdir(parents=True, exist_ok=True)
    for name, rows in [("developers", developers), ("repos", repos), ("issues", issues), ("commits", commits)]:
        with open(out / f"{name}.jsonl", "w") as fh:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).with_name("mini")
    generate(target)
