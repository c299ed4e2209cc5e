// Wire types mirroring the API's canonical JSON encodings.

export type DataType = "issue" | "pr" | "commit";

export type SourceKind =
  | "issue_title"
  | "issue_body"
  | "issue_comment_body"
  | "pr_title"
  | "pr_body"
  | "pr_comment_body"
  | "commit_message";

export const SOURCE_KINDS_BY_TYPE: Record<DataType, SourceKind[]> = {
  issue: ["issue_title", "issue_body", "issue_comment_body"],
  pr: ["pr_title", "pr_body", "pr_comment_body"],
  commit: ["commit_message"],
};

export interface RepositoryRef {
  owner: string;
  name: string;
}

export interface ReleaseRecord {
  tag_name: string;
  published_at: string;
  source_archive_url: string;
}

export interface RepositoryRecord {
  ref: RepositoryRef;
  url: string;
  releases: ReleaseRecord[];
  tags: string[];
  added_at: string;
}

export type CursorStatus = "collecting" | "finished" | "error";

export interface CollectionCursor {
  repo: RepositoryRef;
  data_type: DataType;
  cursor_token: string | null;
  pages_done: number;
  items_done: number;
  status: CursorStatus;
  last_error: string | null;
}

export type JobState = "queued" | "running" | "done" | "failed";

export interface PaJob {
  id: number;
  repo: RepositoryRef;
  data_type: DataType;
  scope: string[];
  state: JobState;
  enqueued_at: string;
  processed_units: number;
  total_units: number;
  error: string | null;
}

export interface Sentence {
  text: string;
  start: number;
  end: number;
  index: number;
}

export interface TextUnit {
  source_kind: SourceKind;
  repo: RepositoryRef;
  source_url: string;
  author: string;
  text: string;
}

export type CandidateStatus = "pending" | "confirmed" | "rejected";

export interface PaCandidate {
  id: string;
  sentence: Sentence;
  unit: TextUnit;
  score: number;
  status: CandidateStatus;
  decided_by: string | null;
  decided_at: string | null;
}

export interface Span {
  term: string;
  start: number;
  end: number;
}

export interface SearchHit {
  url: string;
  source_kind: string;
  author: string;
  text: string;
  spans: Span[];
}

export interface IdentificationUnit {
  source_kind: string;
  url: string;
  author: string;
  text: string;
  spans: Span[];
}

export interface GraphNode {
  id: string;
  kind: string;
  state: string;
  bucket: string;
  label: string;
}

export interface GraphEdge {
  src_id: string;
  dst_id: string;
  relation: string;
}

export interface KnowledgeGraphDoc {
  dimension: string;
  nodes: GraphNode[];
  edges: GraphEdge[];
}

export interface LoginResponse {
  token: string;
  role: "user" | "guest";
  username: string;
}
