use serde::{Deserialize, Serialize};

use crate::compiler::TargetProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Human,
    Ai,
    Robot,
    Twin,
}

impl AgentKind {
    pub fn target(self) -> TargetProfile {
        match self {
            AgentKind::Human => TargetProfile::HumanNl,
            AgentKind::Ai => TargetProfile::MachineJson,
            AgentKind::Robot => TargetProfile::RobotCmd,
            AgentKind::Twin => TargetProfile::TwinUpdate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentProfile {
    pub agent_id: String,
    pub kind: AgentKind,
    /// Name of the dialect the agent reads.
    pub dialect: String,
}

impl AgentProfile {
    pub fn new(agent_id: impl Into<String>, kind: AgentKind, dialect: impl Into<String>) -> AgentProfile {
        AgentProfile {
            agent_id: agent_id.into(),
            kind,
            dialect: dialect.into(),
        }
    }

    pub fn target(&self) -> TargetProfile {
        self.kind.target()
    }
}
