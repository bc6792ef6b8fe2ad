/** Payload types mirroring the service's v1 JSON. */

export type Role = 'annotator1' | 'annotator2' | 'adjudicator' | 'observer';

export type Feature = 'LEMMA' | 'XPOS' | 'HEAD' | 'DEPREL' | 'TOKENIZATION';

export type ItemStatus =
  | 'Pending'
  | 'PartiallyReviewed'
  | 'ResolvedByAgreement'
  | 'NeedsAdjudication'
  | 'ResolvedByAdjudicator';

export interface TokenRow {
  id: number;
  form: string;
  lemma: string;
  xpos: string;
  head: number;
  deprel: string;
}

export interface RecordPayload {
  record_id: string;
  sentence_key: string;
  feature: Feature;
  value_a: string;
  value_b: string;
  left_token_id: number | null;
  right_token_id: number | null;
  block_index: number;
  context_text: string;
}

/** History entries are [actor, timestamp, action, value]. */
export type HistoryEntry = [string, string, string, string | null];

export interface ItemPayload {
  record: RecordPayload;
  annotator1_label?: string | null;
  annotator2_label?: string | null;
  adjudicator_label: string | null;
  status: ItemStatus;
  history: HistoryEntry[];
  final_label: string | null;
  context: {
    text: string;
    tokens_a: TokenRow[];
    tokens_b: TokenRow[];
  };
}

export interface QueuePage {
  items: ItemPayload[];
  total: number;
  page: number;
  page_size: number;
}

export interface AgreementRow {
  feature: string;
  compared: number | null;
  agreed: number | null;
  rate: string;
}

export interface CorrectionRow {
  feature: string;
  corrected: number;
  total: number;
  rate: string;
}

export interface BurndownPayload {
  total: number;
  remaining: number;
  Pending: number;
  PartiallyReviewed: number;
  ResolvedByAgreement: number;
  NeedsAdjudication: number;
  ResolvedByAdjudicator: number;
}

export interface DashboardPayload {
  project_id: string;
  agreement: {
    rows: AgreementRow[];
    excluded_punct: number;
    excluded_tokenization: number;
  };
  corrections: {
    total_tokens: number;
    human: CorrectionRow[];
    adjudicated: CorrectionRow[];
  };
  deprel_categories: Record<string, number>;
  burndown: BurndownPayload;
}

export interface ProjectSummary extends BurndownPayload {
  project_id: string;
}
