//! Episode state machine: prompts a policy through feature extraction,
//! prediction, and reflect/output, validating and executing each action.

mod action;
mod episode;
mod policy;
mod remote;

pub use action::{
    parse_action, parse_model, validate_action, Action, FinalAnswer, ParseContext, ParseError, ParseFailure, ToolCall,
    Violation,
};
pub use episode::{
    run_episode, EpisodeConfig, EpisodeTrace, Outcome, TurnOutput, TurnRecord, TurnTiming, WindowRef,
    TRACE_SCHEMA_VERSION,
};
pub use policy::{
    refine_clip, scripted_tools, select_model, Policy, PolicyError, PolicyReply, PolicySession, RuleInputs,
    ScriptedConfig, ScriptedPolicy,
};
pub use remote::{RemoteConfig, RemotePolicy, SYSTEM_PROMPT};
