"""A worked example: three pattern languages and one composed view.

The corpus wires together a cloud application language, a messaging
language, and a small security language, then builds a view for designing
a secure elastic web application on top of all three. It exists so that
the CLI, the HTTP service, and the tests all have one non-trivial
repository they agree on, and so a fresh install has something to look at.

Everything is created through Repository operations; nothing is written
to the store directly.
"""

from __future__ import annotations

from typing import Any

from .model import pattern_id
from .repository import Repository
from .store import Store

CLOUD = "cloud-computing-patterns"
EIP = "enterprise-integration-patterns"
SECURITY = "security-patterns"

VIEW_ID = "secure-elastic-cloud-applications"

# Frozen shape of the corpus; tests compare against these.
CORPUS_COUNTS = {"languages": 3, "patterns": 15, "relations": 11, "views": 1}
VIEW_MEMBER_COUNT = 12
VIEW_REFERENCED_COUNT = 5
VIEW_OWNED_COUNT = 3

_SECTION_TEXTS: dict[str, dict[str, str]] = {
    f"{CLOUD}/public-cloud": {
        "problem": "An application needs computing resources without owning data centers, and demand is too uneven to size hardware up front.",
        "context": "Workloads are bursty or unpredictable and capital expenditure should be avoided.",
        "solution": "Run on infrastructure operated by a provider and shared between many customers, paying only for the capacity actually used.",
    },
    f"{CLOUD}/infrastructure-as-a-service": {
        "problem": "Teams want full control over operating systems and middleware but none of the physical hosting burden.",
        "context": "A provider offers virtualized servers, storage, and networks on demand.",
        "solution": "Rent virtual machines and attached resources through an API and treat the data center as a programmable substrate.",
    },
    f"{CLOUD}/elastic-infrastructure": {
        "problem": "Provisioned capacity must follow actual load closely, in both directions.",
        "context": "The platform exposes programmatic provisioning and utilization metrics.",
        "solution": "Monitor load and acquire or release resources automatically against defined thresholds, so the footprint tracks demand without manual steps.",
    },
    f"{CLOUD}/elastic-queue": {
        "problem": "Queue depth is a better elasticity signal for asynchronous work than machine-level metrics.",
        "context": "Requests arrive as messages and tolerate some delay before handling.",
        "solution": "Watch the number of waiting messages and scale the handling capacity from it, growing when the backlog rises and shrinking when it drains.",
    },
    f"{CLOUD}/processing-component": {
        "problem": "Background work has to scale out across many identical workers without coordination trouble.",
        "context": "Work items arrive through queues and results are delivered asynchronously.",
        "solution": "Implement the work as a component that takes jobs from a queue, keeps no conversational state of its own, and can be replicated freely.",
    },
    f"{CLOUD}/stateless-component": {
        "problem": "Instances that hold session or interaction state are hard to replace, scale, and fail over.",
        "context": "Instances are added and removed continuously as the application breathes with load.",
        "solution": "Keep state out of the component and in dedicated storage, so any instance can handle any request and instances stay disposable.",
    },
    f"{CLOUD}/message-oriented-middleware": {
        "problem": "Components that call each other directly are coupled in time: both sides must be up and sized for each other.",
        "context": "Parts of the application scale independently and fail independently.",
        "solution": "Exchange information through an intermediary that stores and forwards messages, decoupling senders from receivers in time and cardinality.",
    },
    f"{CLOUD}/user-interface-component": {
        "problem": "The user-facing tier must stay responsive while the real work happens elsewhere at its own pace.",
        "context": "Users interact synchronously; everything behind the scenes is asynchronous.",
        "solution": "Keep the interface component thin: accept input, hand work over as messages, and report progress without blocking on the backend.",
    },
    f"{EIP}/message-channel": {
        "problem": "One application has information, another one needs it, and they should not share internals to pass it.",
        "context": "Applications are connected by a messaging system.",
        "solution": "Write to and read from a named channel in the messaging layer instead of addressing the other application directly.",
    },
    f"{EIP}/point-to-point-channel": {
        "problem": "The sender must be sure exactly one receiver handles each message, even with many candidates listening.",
        "context": "Several consumers may be attached to the same channel.",
        "solution": "Use a channel that delivers each message to a single consumer; the channel arbitrates when several compete.",
    },
    f"{EIP}/competing-consumers": {
        "problem": "A single consumer cannot keep up with the message rate on a channel.",
        "context": "Messages are independent and may be handled in any order.",
        "solution": "Attach several consumers to one point-to-point channel and let each message go to whichever consumer is free.",
    },
    f"{EIP}/message-dispatcher": {
        "problem": "Work must be spread over several performers while keeping control over the assignment rule.",
        "context": "Consumers differ in capability or the order of assignment matters.",
        "solution": "Have one dispatcher consume the channel and hand each message to a performer it selects, instead of letting consumers race.",
    },
    f"{EIP}/polling-consumer": {
        "problem": "The application wants to decide when it is ready to take on another message.",
        "context": "The consumer controls its own threading and pace.",
        "solution": "Ask the channel for a message explicitly and block or return when none is available, consuming at a self-chosen rhythm.",
    },
    f"{EIP}/event-driven-consumer": {
        "problem": "Polling wastes effort when messages are rare and adds latency when they are not.",
        "context": "The messaging API can invoke application code on arrival.",
        "solution": "Register a handler that the messaging system calls as each message arrives, so consumption is driven by availability.",
    },
    f"{SECURITY}/secure-channel": {
        "problem": "Data in transit can be read or altered by parties between the endpoints.",
        "context": "Sensitive information crosses infrastructure the application does not control.",
        "forces": "Confidentiality and integrity must hold without making every component understand cryptography.",
        "solution": "Encrypt and authenticate the transport between the endpoints so intermediaries see only ciphertext, and verify peers before sending anything.",
    },
}


def seed(repo: Repository) -> None:
    """Create the corpus in an empty repository, one operation at a time."""
    repo.create_language(
        "Cloud Computing Patterns",
        "Architecting applications that exploit elastic, provider-operated infrastructure.",
        section_schema=[
            {"name": "icon", "required": False},
            {"name": "problem", "required": True},
            {"name": "context", "required": True},
            {"name": "solution", "required": True},
            {"name": "variations", "required": False},
        ],
        relation_types=[
            {"name": "variation", "directed": True, "description": "target varies the source"},
            {"name": "see-also", "directed": False},
            {"name": "implemented-by", "directed": True},
            {"name": "provides", "directed": True, "description": "source supplies the target's capability"},
        ],
    )
    repo.create_language(
        "Enterprise Integration Patterns",
        "Connecting applications through asynchronous messaging.",
        section_schema=[
            {"name": "icon", "required": False},
            {"name": "problem", "required": True},
            {"name": "context", "required": True},
            {"name": "solution", "required": True},
            {"name": "next", "required": False},
        ],
        relation_types=[
            {"name": "next", "directed": True, "description": "pattern to consider after this one"},
            {"name": "see-also", "directed": False},
            {"name": "implemented-by", "directed": True},
            {"name": "delegates-to", "directed": True},
        ],
    )
    repo.create_language(
        "Security Patterns",
        "Protecting systems and the data they move.",
        section_schema=[
            {"name": "problem", "required": True},
            {"name": "context", "required": True},
            {"name": "forces", "required": False},
            {"name": "solution", "required": True},
            {"name": "see-also", "required": False},
        ],
        relation_types=[{"name": "see-also", "directed": False}],
    )

    names = {
        CLOUD: [
            "Public Cloud",
            "Infrastructure as a Service",
            "Elastic Infrastructure",
            "Elastic Queue",
            "Processing Component",
            "Stateless Component",
            "Message-oriented Middleware",
            "User Interface Component",
        ],
        EIP: [
            "Message Channel",
            "Point-to-Point Channel",
            "Competing Consumers",
            "Message Dispatcher",
            "Polling Consumer",
            "Event-driven Consumer",
        ],
        SECURITY: ["Secure Channel"],
    }
    for language_id, pattern_names in names.items():
        for name in pattern_names:
            sections = _SECTION_TEXTS[pattern_id(language_id, name)]
            repo.create_pattern(language_id, name, sections)

    repo.add_language_relation(
        CLOUD, f"{CLOUD}/public-cloud", f"{CLOUD}/infrastructure-as-a-service", "see-also"
    )
    repo.add_language_relation(
        CLOUD,
        f"{CLOUD}/processing-component",
        f"{EIP}/competing-consumers",
        "implemented-by",
        description="scaling out the workers is exactly the competing consumers arrangement",
    )
    repo.add_language_relation(
        CLOUD,
        f"{CLOUD}/message-oriented-middleware",
        f"{EIP}/message-channel",
        "see-also",
        description="the middleware's queues are message channels",
    )
    repo.add_language_relation(
        CLOUD, f"{CLOUD}/elastic-queue", f"{CLOUD}/processing-component", "see-also"
    )
    repo.add_language_relation(
        CLOUD, f"{CLOUD}/processing-component", f"{CLOUD}/stateless-component", "see-also"
    )
    repo.add_language_relation(
        EIP, f"{EIP}/message-channel", f"{EIP}/point-to-point-channel", "next"
    )
    repo.add_language_relation(
        EIP, f"{EIP}/competing-consumers", f"{EIP}/polling-consumer", "implemented-by"
    )
    repo.add_language_relation(
        EIP, f"{EIP}/competing-consumers", f"{EIP}/event-driven-consumer", "implemented-by"
    )

    view = repo.create_view(
        "Secure Elastic Cloud Applications",
        "A user-facing web application on a public cloud hands work to elastic "
        "processing components through queues; the queues carry customer data, "
        "so transport between components must be protected.",
    )
    members = [
        f"{CLOUD}/elastic-infrastructure",
        f"{CLOUD}/elastic-queue",
        f"{CLOUD}/message-oriented-middleware",
        f"{CLOUD}/processing-component",
        f"{CLOUD}/stateless-component",
        f"{CLOUD}/user-interface-component",
        f"{EIP}/competing-consumers",
        f"{EIP}/event-driven-consumer",
        f"{EIP}/message-dispatcher",
        f"{EIP}/point-to-point-channel",
        f"{EIP}/polling-consumer",
        f"{SECURITY}/secure-channel",
    ]
    for member in members:
        view = repo.add_pattern_to_view(view.id, member, view.version)

    adopted = [
        r
        for r in repo.list_language_relations(CLOUD) + repo.list_language_relations(EIP)
        if {r.source_id, r.target_id} <= set(members)
    ]
    for relation in sorted(adopted, key=lambda r: r.id):
        view = repo.reference_relation_in_view(view.id, relation.id, view.version)

    repo.add_view_relation(
        view.id,
        f"{EIP}/point-to-point-channel",
        f"{SECURITY}/secure-channel",
        "implements",
        description="channels carrying customer data are set up as secure channels",
    )
    repo.add_view_relation(
        view.id,
        f"{EIP}/message-dispatcher",
        f"{CLOUD}/processing-component",
        "delegates-to",
    )
    repo.add_view_relation(
        view.id,
        f"{CLOUD}/message-oriented-middleware",
        f"{EIP}/point-to-point-channel",
        "provides",
        description="the middleware supplies the channels the integration side consumes",
    )


def corpus_bundle() -> dict[str, Any]:
    """The corpus as a bundle document, built in a throwaway store."""
    store = Store(":memory:")
    try:
        repo = Repository(store)
        seed(repo)
        return repo.export_bundle()
    finally:
        store.close()
