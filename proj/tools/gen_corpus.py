#!/usr/bin/env python3
"""Regenerates the definition corpus under tests/fixtures/definitions and samples/.

Output is deterministic; rerun after changing the generator and commit the result.
"""

import json
import random
from pathlib import Path

import yaml

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures" / "definitions"
SAMPLES = ROOT / "samples"

TOPICS = [
    ("Reconnaissance", "Scan the victim network and find the host running an outdated web server."),
    ("Web foothold", "Exploit the file upload form to obtain a shell as the web user."),
    ("Password cracking", "Recover the database password from the leaked hash dump."),
    ("Privilege escalation", "Abuse the misconfigured sudo rule to read /root/flag.txt."),
    ("Lateral movement", "Reuse the harvested SSH key to reach the internal file server."),
    ("Log forensics", "Find the attacker's source address in the web server access log."),
    ("Packet analysis", "Extract the credentials sent in clear text in capture.pcap."),
    ("Persistence", "Locate the cron job the intruder planted and read its payload."),
]

CATEGORIES = [
    "defacement", "data-exfiltration", "service-outage", "credential-theft", "ransomware",
    "phishing-success", "dns-hijack", "malware-persistence", "lateral-movement", "privilege-escalation",
    "web-shell", "sql-injection", "ddos-impact", "config-tampering", "backdoor-account",
    "log-deletion", "mail-spoofing", "certificate-misuse", "firewall-bypass", "botnet-enrolment",
    "insider-leak", "brute-force-success", "unpatched-service", "weak-credentials", "slow-incident-report",
    "missing-forensics", "rule-violation", "unauthorized-scan", "reporting-quality", "availability-sla",
]


def ctf_definition(rng, ident, levels, *, free_attempts=None, questionnaire=False, title=None):
    nodes = [{"id": "kali", "role": "attacker", "services": ["ssh"]},
             {"id": "web", "role": "victim", "services": ["http", "ssh"]},
             {"id": "db", "role": "server", "services": ["postgres"]},
             {"id": "gw", "role": "router"}]
    links = [["kali", "gw"], ["gw", "web"], ["web", "db"]]
    level_list, hints = [], []
    total = 0
    for i in range(levels):
        topic, task = TOPICS[i % len(TOPICS)]
        expected = rng.choice([8, 10, 12, 15, 20])
        total += expected
        points = rng.choice([50, 100, 150, 200])
        level_list.append({
            "id": f"level-{i + 1}",
            "order": i + 1,
            "title": topic,
            "task_text": task,
            "flag": f"FLAG{{{ident}-{i + 1}-{rng.randrange(16**6):06x}}}",
            "max_points": points,
            "expected_duration": expected,
            "solution_text": f"Walkthrough for {topic.lower()}.",
            "skip_penalty": rng.choice([0, 10, 25]),
            "solution_display_penalty": rng.choice([0, 0, 20]),
        })
        for h in range(rng.randint(1, 3)):
            hints.append({"id": f"l{i + 1}-h{h + 1}", "level_id": f"level-{i + 1}",
                          "text": f"Hint {h + 1} for {topic.lower()}.",
                          "penalty_points": rng.choice([5, 10, 15])})
    duration = max(60, min(120, total + 15 * rng.randint(1, 3)))
    criteria = {"wrong_flag_penalty": rng.choice([0, 1, 2]), "free_attempts": free_attempts}
    if questionnaire:
        criteria["questionnaires"] = [{"id": "exit-poll", "questions": ["How difficult was it?", "Would you repeat it?"]}]
    return {
        "schema_version": 1,
        "id": ident,
        "title": title or f"Capture the flag, {levels} levels",
        "kind": "CTF",
        "prerequisites": ["linux-basics"] if rng.random() < 0.5 else [],
        "expected_total_duration": duration,
        "max_participants": 20,
        "scenario": {
            "topology": {"nodes": nodes, "links": links},
            "levels": level_list,
            "hints": hints,
            "vulnerabilities": [{"node_id": "web", "label": "unrestricted file upload"}],
        },
        "criteria": criteria,
    }


def cdx_definition(rng, ident, teams=6, services_per_team=6, categories=24, duration=360):
    nodes = [{"id": "internet", "role": "router"},
             {"id": "red-c2", "role": "attacker", "services": ["https"]}]
    links = [["red-c2", "internet"]]
    services = []
    layout = [("web", "server", ["http", "https"]), ("mail", "server", ["smtp", "imap"]),
              ("dns", "server", ["dns"]), ("db", "server", ["postgres"]), ("ws1", "workstation", ["ssh"])]
    for t in range(1, teams + 1):
        team = f"team-{t}"
        fw = f"t{t}-fw"
        nodes.append({"id": fw, "role": "router", "team": team})
        links.append([fw, "internet"])
        for name, role, svcs in layout:
            node = f"t{t}-{name}"
            nodes.append({"id": node, "role": role, "services": svcs, "team": team})
            links.append([node, fw])
        candidates = [("web", "http"), ("web", "https"), ("mail", "smtp"), ("mail", "imap"),
                      ("dns", "dns"), ("db", "postgres"), ("ws1", "ssh")][:services_per_team]
        for name, svc in candidates:
            sid = f"t{t}-{name}-{svc}"
            entry = {"id": sid, "node_id": f"t{t}-{name}", "service_name": svc,
                     "check_interval": rng.choice([60, 120, 300]),
                     "award_per_check": rng.choice([1, 2, 5]),
                     "penalty_per_failed_check": rng.choice([2, 5, 10])}
            if svc == "https":
                entry["depends_on"] = [f"t{t}-web-http"]
            services.append(entry)
    cats = CATEGORIES[:categories]
    attacks = []
    for t in range(1, teams + 1):
        for k in range(2):
            target = rng.choice(["web", "mail", "dns", "db", "ws1"])
            attacks.append({"id": f"atk-t{t}-{k + 1}", "scheduled_offset": rng.randrange(15, duration - 30, 5),
                            "attack_type": rng.choice(["sqli", "phishing", "ddos", "bruteforce", "rce"]),
                            "target": f"t{t}-{target}", "category": rng.choice(cats),
                            "penalty_points": rng.choice([50, 100, 200]),
                            "details": f"Scripted attack {k + 1} against team {t}."})
    attacks.sort(key=lambda a: (a["scheduled_offset"], a["id"]))
    return {
        "schema_version": 1,
        "id": ident,
        "title": f"Cyber defence exercise, {teams} blue teams",
        "kind": "CDX",
        "prerequisites": ["incident-handling", "network-defence"],
        "expected_total_duration": duration,
        "max_participants": teams * 6,
        "scenario": {"topology": {"nodes": nodes, "links": links}, "attack_plan": attacks,
                     "vulnerabilities": [{"node_id": f"t{t}-web", "label": "outdated CMS"} for t in range(1, teams + 1)]},
        "criteria": {"scored_services": services, "manual_penalty_categories": cats,
                     "revert_penalty": 100},
    }


def write(path, doc, fmt):
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    else:
        path.write_text(yaml.safe_dump(doc, sort_keys=False, allow_unicode=True, width=100), encoding="utf-8")


def main():
    rng = random.Random(20260105)
    corpus = []
    for n in (5, 6, 7, 8):
        corpus.append((f"ctf-{n}-levels", ctf_definition(rng, f"ctf-{n}-levels", n), "yaml"))
        corpus.append((f"ctf-{n}-levels-alt", ctf_definition(rng, f"ctf-{n}-levels-alt", n, free_attempts=3), "json"))
    corpus.append(("ctf-questionnaire", ctf_definition(rng, "ctf-questionnaire", 5, questionnaire=True), "yaml"))
    corpus.append(("ctf-unicode", ctf_definition(rng, "ctf-unicode", 5, title="Zachyťte vlajku: úvod 🚩"), "json"))
    single = ctf_definition(rng, "ctf-single-level", 1)
    single["scenario"]["levels"][0]["task_text"] = "Line one.\nLine two: a \"quoted\" word.\n"
    corpus.append(("ctf-single-level", single, "yaml"))
    # Strings that YAML would otherwise read as booleans, numbers or null.
    tricky = ctf_definition(rng, "ctf-tricky-scalars", 5)
    tricky["scenario"]["levels"][0]["flag"] = "yes"
    tricky["scenario"]["levels"][1]["flag"] = "123"
    tricky["scenario"]["levels"][2]["flag"] = "null"
    tricky["scenario"]["levels"][3]["title"] = "1.5"
    corpus.append(("ctf-tricky-scalars", tricky, "yaml"))
    for cats, fmt in ((10, "yaml"), (24, "json"), (30, "yaml"), (30, "json")):
        ident = f"cdx-6-teams-{cats}-categories" + ("-json" if fmt == "json" and cats == 30 else "")
        corpus.append((ident, cdx_definition(rng, ident, categories=cats), fmt))
    corpus.append(("cdx-small", cdx_definition(rng, "cdx-small", teams=2, services_per_team=3, categories=4, duration=120), "yaml"))
    corpus.append(("cdx-dense", cdx_definition(rng, "cdx-dense", teams=6, services_per_team=7, categories=30), "json"))

    corpus.append(("ctf-7-levels-poll", ctf_definition(rng, "ctf-7-levels-poll", 7, free_attempts=0, questionnaire=True), "json"))
    corpus.append(("ctf-8-levels-capped", ctf_definition(rng, "ctf-8-levels-capped", 8, free_attempts=5), "yaml"))
    corpus.append(("cdx-3-teams", cdx_definition(rng, "cdx-3-teams", teams=3, services_per_team=5, categories=12, duration=240), "yaml"))
    corpus.append(("cdx-6-teams-6h", cdx_definition(rng, "cdx-6-teams-6h", categories=18), "json"))

    for name, doc, fmt in corpus:
        write(FIXTURES / f"{name}.{fmt}", doc, fmt)

    write(SAMPLES / "ctf-intro.yaml", ctf_definition(random.Random(7), "ctf-intro", 5), "yaml")
    write(SAMPLES / "cdx-exercise.yaml", cdx_definition(random.Random(8), "cdx-exercise"), "yaml")
    write(SAMPLES / "ctf-sim.json", {
        "seed": 42, "wall_duration": 120,
        "trainees": [{"actor_id": f"trainee-{i + 1}", "skill": s, "hint_propensity": h, "guess_propensity": g}
                     for i, (s, h, g) in enumerate([(0.9, 0.1, 0.2), (0.7, 0.3, 0.4), (0.5, 0.5, 0.5),
                                                    (0.3, 0.7, 0.8), (0.2, 0.9, 0.9)])]}, "json")
    write(SAMPLES / "cdx-sim.json", {
        "seed": 7, "wall_duration": 360,
        "team_profiles": [{"team_id": f"team-{t}", "defense_skill": round(0.3 + 0.1 * t, 2), "members": 4}
                          for t in range(1, 7)]}, "json")
    print(f"wrote {len(corpus)} fixtures")


if __name__ == "__main__":
    main()
