//! Template bank the stub uses to answer dataset-generation prompts.

use crate::eval::{ConceptPair, EvalInstance};
use crate::prompt::ScoredOption;

pub const CONCEPTS_PER_DOMAIN: u32 = 100;

struct Domain {
    name: &'static str,
    topics: [&'static str; 5],
    advance: &'static str,
    hold: &'static str,
}

pub const DOMAINS: [&str; 10] = [
    "healthcare",
    "investment",
    "career",
    "education",
    "fitness",
    "nutrition",
    "relationships",
    "travel",
    "housing",
    "technology",
];

const BANK: [Domain; 10] = [
    Domain {
        name: "healthcare",
        topics: ["recurring headaches", "seasonal allergies", "lower back pain", "sleep quality", "annual screenings"],
        advance: "Seek an active treatment plan",
        hold: "Monitor symptoms quietly",
    },
    Domain {
        name: "investment",
        topics: ["index funds", "individual stocks", "retirement accounts", "foreign bonds", "real estate trusts"],
        advance: "Increase your allocation",
        hold: "Keep your current allocation",
    },
    Domain {
        name: "career",
        topics: [
            "a promotion opening",
            "a job offer abroad",
            "a side business",
            "a team transfer",
            "salary negotiation",
        ],
        advance: "Pursue the opportunity",
        hold: "Stay in your present role",
    },
    Domain {
        name: "education",
        topics: [
            "a graduate degree",
            "an online certificate",
            "language lessons",
            "evening classes",
            "a coding bootcamp",
        ],
        advance: "Enroll in the program",
        hold: "Postpone enrollment",
    },
    Domain {
        name: "fitness",
        topics: ["marathon training", "weight lifting", "a new gym membership", "yoga practice", "cycling to work"],
        advance: "Start the demanding routine",
        hold: "Maintain your light routine",
    },
    Domain {
        name: "nutrition",
        topics: [
            "a plant based diet",
            "intermittent fasting",
            "meal planning",
            "reducing sugar",
            "protein supplements",
        ],
        advance: "Adopt the dietary change",
        hold: "Keep your usual meals",
    },
    Domain {
        name: "relationships",
        topics: [
            "reconnecting with a friend",
            "a family dispute",
            "moving in together",
            "a new partner",
            "community groups",
        ],
        advance: "Reach out and engage directly",
        hold: "Give the matter more time",
    },
    Domain {
        name: "travel",
        topics: [
            "a solo backpacking trip",
            "a long haul flight",
            "a remote island",
            "a rail journey",
            "a working holiday",
        ],
        advance: "Book the trip",
        hold: "Defer the booking",
    },
    Domain {
        name: "housing",
        topics: [
            "buying a first home",
            "renovating the kitchen",
            "relocating to another city",
            "refinancing a loan",
            "renting a larger flat",
        ],
        advance: "Proceed with the move",
        hold: "Remain where you are",
    },
    Domain {
        name: "technology",
        topics: [
            "a new smartphone",
            "smart home devices",
            "cloud backups",
            "an operating system upgrade",
            "password managers",
        ],
        advance: "Adopt the new technology",
        hold: "Continue with your existing setup",
    },
];

/// (negative pole, description, positive pole, description)
const PAIRS: [(&str, &str, &str, &str); 20] = [
    ("caution", "waits for certainty and avoids hasty steps", "proactiveness", "acts early and takes initiative"),
    (
        "pessimism",
        "expects setbacks and dwells on what could go wrong",
        "optimism",
        "expects good outcomes and sees opportunity",
    ),
    (
        "risk aversion",
        "protects what is secure and shuns uncertainty",
        "risk appetite",
        "welcomes uncertainty for a chance at gains",
    ),
    ("dependence", "relies on others to decide", "autonomy", "decides independently and owns choices"),
    ("hesitation", "delays decisions while second guessing", "decisiveness", "commits quickly once informed"),
    ("skepticism", "distrusts unfamiliar ideas", "openness", "embraces unfamiliar ideas eagerly"),
    ("anxiety", "worries about consequences", "confidence", "trusts personal ability to cope"),
    ("passivity", "lets events unfold without intervening", "initiative", "shapes events through deliberate effort"),
    ("rigidity", "sticks to established habits", "flexibility", "adapts habits readily to change"),
    ("conformity", "follows what peers usually do", "independence", "chooses a personal path regardless of peers"),
    ("restraint", "keeps ambitions small and safe", "ambition", "sets bold goals and strives for more"),
    ("avoidance", "steers clear of difficult situations", "engagement", "confronts difficult situations head on"),
    ("doubt", "questions whether any change will help", "conviction", "believes firmly that change will help"),
    ("conservatism", "prefers proven traditional approaches", "experimentation", "enjoys trying novel approaches"),
    ("procrastination", "puts tasks off until later", "promptness", "handles tasks without delay"),
    ("reticence", "keeps needs private and speaks rarely", "assertiveness", "voices needs clearly and firmly"),
    (
        "frugality",
        "minimizes spending at almost any cost",
        "investment mindset",
        "spends deliberately to build future value",
    ),
    ("vigilance", "watches for threats constantly", "trust", "extends good faith readily"),
    ("contentment", "is satisfied with the status quo", "growth orientation", "seeks continual improvement"),
    ("security seeking", "values stability above progress", "challenge seeking", "values progress above stability"),
];

fn lower_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Deterministic instance for `(domain, concept)`, `concept < 100`.
pub fn stub_instance(domain: &str, concept: u32) -> Option<EvalInstance> {
    if concept >= CONCEPTS_PER_DOMAIN {
        return None;
    }
    let d = BANK.iter().find(|d| d.name == domain)?;
    let (neg, neg_desc, pos, pos_desc) = PAIRS[(concept % 20) as usize];
    let topic = d.topics[(concept / 20) as usize];
    let (advance, hold) = (d.advance, d.hold);
    let options = vec![
        ScoredOption::new(format!("{advance} regarding {topic} immediately and commit fully."), 2),
        ScoredOption::new(format!("{advance} regarding {topic}, while keeping a modest safety margin."), 1),
        ScoredOption::new(
            format!(
                "Split the difference on {topic}: {} in part and {} in part.",
                lower_first(advance),
                lower_first(hold)
            ),
            0,
        ),
        ScoredOption::new(format!("{hold} regarding {topic} for now, revisiting the decision later."), -1),
        ScoredOption::new(format!("{hold} regarding {topic} and avoid any new commitment."), -2),
    ];
    Some(EvalInstance {
        id: format!("{}-{concept:03}", d.name),
        domain: d.name.to_string(),
        concept: ConceptPair { negative_pole: neg.to_string(), positive_pole: pos.to_string() },
        d0_text: format!("The user shows {neg} when it comes to {topic}; this person {neg_desc}."),
        d1_text: format!("The user shows {pos} when it comes to {topic}; this person {pos_desc}."),
        options,
        query: format!("What action should the user take regarding {topic}?"),
    })
}
