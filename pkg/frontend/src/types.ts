/** Payload shapes of the sync-service HTTP API (v1). */

export interface KindAdherence {
  delivered: number;
  answered: number;
  rate: number;
}

export interface AdherenceReport {
  delivered: number;
  answered: number;
  rate: number;
  rate_percent: number;
  by_kind: Record<string, KindAdherence>;
  answered_mix: Record<string, number>;
}

export interface AccuracyReport {
  confirmed_yes: number;
  confirmed_no: number;
  excluded_no_answer: number;
  accuracy: number | null;
  accuracy_percent: number | null;
}

export interface CoverageDay {
  day_start: number;
  location_h: number;
  audio_h: number;
}

export interface CoverageReport {
  target_hours: number;
  fraction_days_at_target: number;
  days: CoverageDay[];
}

export interface WeeklyAggregate {
  week_index: number;
  iso_week: string;
  conversation_count: number;
  home_time_h: number;
}

export interface BurstSummary {
  time_point: number;
  item_means: Record<string, number>;
  item_counts: Record<string, number>;
}

export interface ParticipantReport {
  participant_id: string;
  adherence: AdherenceReport;
  accuracy: AccuracyReport;
  coverage: CoverageReport;
  weekly: WeeklyAggregate[];
  message_mix: Record<string, number>;
  message_mix_percent: Record<string, number>;
  bursts: BurstSummary[];
  goals_total: number;
  activities_total: number;
  diamonds_total: number;
  context_windows: number;
}

export interface ContextWindow {
  session_id: string;
  slot: string;
  start: string;
  end: string;
  detected: string;
  home_fraction: number;
  episode_count: number;
  basis: string;
}

export interface Goal {
  goal_id: string;
  parent: string | null;
  level: "long_term" | "short_term" | "step";
  title: string;
  status: "open" | "completed";
}

export interface Message {
  message_id: string;
  participant_scope: string | null;
  category: string;
  text: string;
  created_by: string;
}

export interface SessionNode {
  node_id: string;
  prompt: string;
  answer: { kind: string; options: string[]; lo: number; hi: number };
  branch: Record<string, string>;
  next: string | null;
}

export interface Session {
  session_id: string;
  participant_id: string;
  kind: string;
  slot: string;
  delivered_at: string;
  state: string;
  script: { script_id: string; entry: string; nodes: SessionNode[] };
  detected_context: string | null;
  basis: string | null;
  confirmed: string | null;
  effective_context: string | null;
  message_ids: string[];
}

export const MESSAGE_CATEGORIES = [
  "defeatist_challenge",
  "threat_challenge",
  "social_encouragement",
  "goal_activity_encouragement",
] as const;

export type MessageCategory = (typeof MESSAGE_CATEGORIES)[number];
